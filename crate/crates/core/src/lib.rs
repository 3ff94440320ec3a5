//! Probabilistic hierarchy-and-exclusion (pHEX) label graphs.
//!
//! Label relations (exclusion, subsumption, and one mutually exclusive and
//! collectively exhaustive group) are compiled into an Ising model. Per-label
//! marginals come from loopy belief propagation or, for small graphs, exact
//! enumeration, and the marginals drive CRF-style training of local linear
//! scorers.
//!
//! ```
//! use phex::graph::{EdgeStrength, LabelGraph};
//! use phex::{compile, run_lbp, ClampSet, LbpOptions};
//!
//! let mut g = LabelGraph::new(["animal", "dog"]).unwrap();
//! g.add_subsumption(0, 1, EdgeStrength::from_q(0.3).unwrap()).unwrap();
//! let model = compile(&g).unwrap();
//! let t = run_lbp(&model.condition(&[0.0, 1.0]).unwrap(), &ClampSet::new(), &LbpOptions::default())
//!     .unwrap();
//! assert!(t.p[0] > 0.5);
//! ```

pub mod error;
pub mod cli;
pub mod exact;
pub mod graph;
pub mod harness;
pub mod infer;
pub mod ising;
pub mod lbp;
pub mod learning;
pub mod par;

pub use error::{Error, Result};
pub use exact::{
    exact_conditional, exact_hex_limit_marginals, exact_hex_marginals, exact_marginals, ClampSet,
    MarginalTable,
};
pub use graph::{normalize_mece, strength_from_q, strength_from_u, EdgeStrength, LabelGraph, Spin};
pub use ising::{compile, condition, ConditionedModel, IsingModel};
pub use lbp::{predict, run_lbp, LbpOptions, PredictMode, Prediction};
