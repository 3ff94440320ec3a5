use thiserror::Error;

use crate::graph::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid label graph: {0}")]
    InvalidGraph(ValidationReport),

    #[error("invalid strength: {0}")]
    InvalidStrength(String),

    #[error("contradictory graph: {0}")]
    Contradiction(String),

    #[error("hard-edge unsupported in compile (edge {a}-{b})")]
    HardEdgeUnsupported { a: usize, b: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("enumeration bound exceeded: {n} free variables (max {max})")]
    EnumerationBound { n: usize, max: usize },

    #[error("invalid clamp: {0}")]
    InvalidClamp(String),

    #[error("infeasible clamp: no legal configuration satisfies the clamps")]
    InfeasibleClamp,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure at iteration {iteration}: {detail}")]
    NumericalFailure { iteration: usize, detail: String },

    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error("unknown label '{0}'")]
    UnknownLabel(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalFailure { .. } | Error::Divergence { .. } => 2,
            _ => 1,
        }
    }
}
