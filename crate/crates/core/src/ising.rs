//! Compilation of label graphs into Ising models.
//!
//! The model is `p(y) ∝ exp(-Σ J_ij y_i y_j - Σ h'_i y_i)` with `β = 1`, where
//! `h' = h - z` folds the per-label classifier scores `z` into the fields.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeKind, EdgeStrength, LabelGraph, MeceGroup, Spin};

/// Inverse temperature. Fixed.
pub const BETA: f64 = 1.0;

/// Pairwise energy of an exclusion edge: `u y1 y2 + u y1 + u y2`.
pub fn pair_energy_exclusion(y1: Spin, y2: Spin, u: f64) -> f64 {
    let (a, b) = (y1.value(), y2.value());
    u * a * b + u * a + u * b
}

/// Pairwise energy of a subsumption edge (`parent` subsumes `child`):
/// `-u yp yc - u yp + u yc`.
pub fn pair_energy_subsumption(parent: Spin, child: Spin, u: f64) -> f64 {
    let (p, c) = (parent.value(), child.value());
    -u * p * c - u * p + u * c
}

pub fn pair_energy(kind: EdgeKind, ya: Spin, yb: Spin, u: f64) -> f64 {
    match kind {
        EdgeKind::Exclusion => pair_energy_exclusion(ya, yb, u),
        EdgeKind::Subsumption => pair_energy_subsumption(ya, yb, u),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    n: usize,
    couplings: BTreeMap<(usize, usize), f64>,
    fields: Vec<f64>,
    mece: Option<MeceGroup>,
}

impl IsingModel {
    /// Builds a model directly from couplings and fields. Coupling keys are
    /// normalized to `(min, max)`; repeated pairs are summed.
    pub fn from_parts(
        n: usize,
        couplings: impl IntoIterator<Item = ((usize, usize), f64)>,
        fields: Vec<f64>,
        mece: Option<MeceGroup>,
    ) -> Result<Self> {
        if fields.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: fields.len() });
        }
        let mut map = BTreeMap::new();
        for ((i, j), v) in couplings {
            if i == j || i >= n || j >= n || !v.is_finite() {
                return Err(Error::InvalidArgument(format!("bad coupling ({i}, {j}) = {v}")));
            }
            *map.entry((i.min(j), i.max(j))).or_insert(0.0) += v;
        }
        if let Some(g) = &mece {
            if g.members.len() < 2 || g.members.iter().any(|&m| m >= n) {
                return Err(Error::InvalidArgument("bad MECE group".into()));
            }
        }
        if fields.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidArgument("non-finite field".into()));
        }
        Ok(Self { n, couplings: map, fields, mece })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        BETA
    }

    pub fn couplings(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.couplings
    }

    pub fn coupling(&self, i: usize, j: usize) -> Option<f64> {
        self.couplings.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn mece(&self) -> Option<&MeceGroup> {
        self.mece.as_ref()
    }

    /// Adjacency lists `(neighbor, J)` in ascending neighbor order.
    pub fn neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (&(i, j), &v) in &self.couplings {
            adj[i].push((j, v));
            adj[j].push((i, v));
        }
        for list in &mut adj {
            list.sort_by_key(|&(k, _)| k);
        }
        adj
    }

    /// Absorbs scores: `h'_i = h_i - z_i`.
    pub fn condition(&self, z: &[f64]) -> Result<ConditionedModel<'_>> {
        condition(self, z)
    }

    /// The model with zero evidence.
    pub fn unconditioned(&self) -> ConditionedModel<'_> {
        ConditionedModel {
            base: self,
            z: vec![0.0; self.n],
            fields: self.fields.clone(),
        }
    }

    pub fn to_json(&self) -> IsingJson {
        IsingJson {
            j: self.couplings.iter().map(|(&(i, j), &v)| (i, j, v)).collect(),
            h: self.fields.clone(),
        }
    }
}

/// Debug export: `{"J": [[i, j, value], ...], "h": [value, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingJson {
    #[serde(rename = "J")]
    pub j: Vec<(usize, usize, f64)>,
    pub h: Vec<f64>,
}

/// An Ising model with one instance's evidence absorbed into its fields.
#[derive(Debug, Clone)]
pub struct ConditionedModel<'a> {
    pub base: &'a IsingModel,
    pub z: Vec<f64>,
    /// Effective fields `h' = h - z`.
    pub fields: Vec<f64>,
}

impl ConditionedModel<'_> {
    pub fn n(&self) -> usize {
        self.base.n
    }

    pub fn mece(&self) -> Option<&MeceGroup> {
        self.base.mece.as_ref()
    }

    /// `Σ J_ij y_i y_j + Σ h'_i y_i`. The MECE constraint is not checked.
    pub fn energy(&self, y: &[Spin]) -> Result<f64> {
        energy(self, y)
    }

    /// Same couplings, effective fields replaced.
    pub fn with_fields(&self, fields: Vec<f64>) -> Result<Self> {
        if fields.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: fields.len() });
        }
        Ok(ConditionedModel { base: self.base, z: self.z.clone(), fields })
    }
}

/// Compiles a validated, MECE-normalized graph with finite strengths.
///
/// Each exclusion edge `(a, b, u)` adds `+u` to `J_ab`, `h_a` and `h_b`; each
/// subsumption edge `parent -> child` adds `-u` to `J`, `-u` to `h_parent` and
/// `+u` to `h_child`.
pub fn compile(graph: &LabelGraph) -> Result<IsingModel> {
    graph.validate().into_result()?;
    let n = graph.n();
    let mut couplings = BTreeMap::new();
    let mut fields = vec![0.0; n];
    for e in &graph.edges {
        let u = match e.strength {
            EdgeStrength::Finite(u) => u,
            EdgeStrength::Hard => return Err(Error::HardEdgeUnsupported { a: e.a, b: e.b }),
        };
        let (j, ha, hb) = match e.kind {
            EdgeKind::Exclusion => (u, u, u),
            EdgeKind::Subsumption => (-u, -u, u),
        };
        *couplings.entry(e.pair_key()).or_insert(0.0) += j;
        fields[e.a] += ha;
        fields[e.b] += hb;
    }
    Ok(IsingModel { n, couplings, fields, mece: graph.mece.clone() })
}

pub fn condition<'a>(model: &'a IsingModel, z: &[f64]) -> Result<ConditionedModel<'a>> {
    if z.len() != model.n {
        return Err(Error::DimensionMismatch { expected: model.n, got: z.len() });
    }
    if let Some(bad) = z.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite score {bad}")));
    }
    let fields = model.fields.iter().zip(z).map(|(h, z)| h - z).collect();
    Ok(ConditionedModel { base: model, z: z.to_vec(), fields })
}

pub fn energy(model: &ConditionedModel<'_>, y: &[Spin]) -> Result<f64> {
    if y.len() != model.n() {
        return Err(Error::DimensionMismatch { expected: model.n(), got: y.len() });
    }
    let pair: f64 = model
        .base
        .couplings
        .iter()
        .map(|(&(i, j), &v)| v * y[i].value() * y[j].value())
        .sum();
    let unary: f64 = model.fields.iter().zip(y).map(|(h, s)| h * s.value()).sum();
    Ok(pair + unary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeStrength;

    fn st(u: f64) -> EdgeStrength {
        EdgeStrength::from_u(u).unwrap()
    }

    #[test]
    fn exclusion_energy_values() {
        assert_eq!(pair_energy_exclusion(Spin::Up, Spin::Up, 0.5), 1.5);
        assert_eq!(pair_energy_exclusion(Spin::Down, Spin::Down, 0.5), -0.5);
        assert_eq!(pair_energy_exclusion(Spin::Up, Spin::Down, 0.5), -0.5);
        for a in Spin::BOTH {
            for b in Spin::BOTH {
                assert_eq!(pair_energy_exclusion(a, b, 0.0), 0.0);
            }
        }
    }

    #[test]
    fn subsumption_energy_values() {
        assert_eq!(pair_energy_subsumption(Spin::Down, Spin::Up, 1.0), 3.0);
        assert_eq!(pair_energy_subsumption(Spin::Up, Spin::Up, 1.0), -1.0);
        assert_eq!(pair_energy_subsumption(Spin::Up, Spin::Down, 1.0), -1.0);
        assert_eq!(pair_energy_subsumption(Spin::Down, Spin::Down, 1.0), -1.0);
        for a in Spin::BOTH {
            for b in Spin::BOTH {
                assert_eq!(pair_energy_subsumption(a, b, 0.0), 0.0);
            }
        }
    }

    #[test]
    fn compile_single_exclusion() {
        let mut g = LabelGraph::new(["dog", "cat"]).unwrap();
        g.add_exclusion(0, 1, st(1.0)).unwrap();
        let m = compile(&g).unwrap();
        assert_eq!(m.coupling(0, 1), Some(1.0));
        assert_eq!(m.fields(), &[1.0, 1.0]);
    }

    #[test]
    fn compile_single_subsumption() {
        let mut g = LabelGraph::new(["animal", "dog"]).unwrap();
        g.add_subsumption(0, 1, st(1.0)).unwrap();
        let m = compile(&g).unwrap();
        assert_eq!(m.coupling(1, 0), Some(-1.0));
        assert_eq!(m.fields(), &[-1.0, 1.0]);
    }

    #[test]
    fn compile_edgeless_and_hard() {
        let g = LabelGraph::new(["a", "b", "c"]).unwrap();
        let m = compile(&g).unwrap();
        assert!(m.couplings().is_empty());
        assert_eq!(m.fields(), &[0.0, 0.0, 0.0]);

        let mut g = LabelGraph::new(["a", "b"]).unwrap();
        g.add_exclusion(0, 1, EdgeStrength::Hard).unwrap();
        assert!(matches!(compile(&g), Err(Error::HardEdgeUnsupported { .. })));
    }

    #[test]
    fn conditioning() {
        let m = IsingModel::from_parts(2, [], vec![1.0, 1.0], None).unwrap();
        assert_eq!(m.condition(&[1.0, 1.0]).unwrap().fields, vec![0.0, 0.0]);
        let m = IsingModel::from_parts(2, [], vec![-1.0, 1.0], None).unwrap();
        assert_eq!(m.condition(&[0.5, -0.5]).unwrap().fields, vec![-1.5, 1.5]);
        assert_eq!(m.condition(&[0.0, 0.0]).unwrap().fields, m.fields());
        assert!(matches!(m.condition(&[0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(m.condition(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn energy_examples() {
        let g = LabelGraph::new(["a", "b", "c"]).unwrap();
        let m = compile(&g).unwrap();
        let z = [0.3, -1.2, 2.0];
        let cm = m.condition(&z).unwrap();
        let y = [Spin::Up, Spin::Down, Spin::Down];
        let expect: f64 = -z.iter().zip(&y).map(|(z, s)| z * s.value()).sum::<f64>();
        assert!((cm.energy(&y).unwrap() - expect).abs() < 1e-15);

        let mut g = LabelGraph::new(["dog", "cat"]).unwrap();
        g.add_exclusion(0, 1, st(1.0)).unwrap();
        let m = compile(&g).unwrap();
        assert_eq!(m.unconditioned().energy(&[Spin::Up, Spin::Up]).unwrap(), 3.0);
        assert!(m.unconditioned().energy(&[Spin::Up]).is_err());
    }

    #[test]
    fn json_export_shape() {
        let mut g = LabelGraph::new(["animal", "dog"]).unwrap();
        g.add_subsumption(0, 1, st(0.5)).unwrap();
        let text = serde_json::to_string(&compile(&g).unwrap().to_json()).unwrap();
        assert_eq!(text, r#"{"J":[[0,1,-0.5]],"h":[-0.5,0.5]}"#);
    }
}
