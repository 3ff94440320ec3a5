//! One front door for the three inference routes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{exact_hex_marginals, exact_marginals, ClampSet, MarginalTable};
use crate::graph::LabelGraph;
use crate::ising::{compile, IsingModel};
use crate::lbp::{run_lbp, LbpOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Inference {
    /// Enumeration over the compiled Ising model.
    Exact,
    /// Enumeration with hard edges as constraints.
    Hex,
    Lbp(LbpOptions),
}

impl Inference {
    pub fn name(&self) -> &'static str {
        match self {
            Inference::Exact => "exact",
            Inference::Hex => "hex",
            Inference::Lbp(_) => "lbp",
        }
    }
}

/// A validated label graph together with its compiled Ising model (absent
/// when the graph has hard edges).
#[derive(Debug, Clone)]
pub struct CrfModel {
    graph: LabelGraph,
    ising: Option<IsingModel>,
}

impl CrfModel {
    pub fn new(graph: LabelGraph) -> Result<Self> {
        graph.validate().into_result()?;
        let ising = if graph.has_hard_edges() { None } else { Some(compile(&graph)?) };
        Ok(Self { graph, ising })
    }

    pub fn graph(&self) -> &LabelGraph {
        &self.graph
    }

    pub fn ising(&self) -> Option<&IsingModel> {
        self.ising.as_ref()
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    fn require_ising(&self) -> Result<&IsingModel> {
        self.ising.as_ref().ok_or_else(|| {
            let e = self.graph.edges.iter().find(|e| e.strength.is_hard()).expect("hard edge");
            Error::HardEdgeUnsupported { a: e.a, b: e.b }
        })
    }

    pub fn marginals(&self, z: &[f64], clamps: &ClampSet, inference: &Inference) -> Result<MarginalTable> {
        match inference {
            Inference::Exact => exact_marginals(&self.require_ising()?.condition(z)?, clamps),
            Inference::Lbp(opts) => run_lbp(&self.require_ising()?.condition(z)?, clamps, opts),
            Inference::Hex => exact_hex_marginals(&self.graph, z, clamps),
        }
    }
}
