use std::fmt;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{qubits} qubits exceed the dense simulation limit of {limit}")]
    DenseLimitExceeded { qubits: usize, limit: usize },

    #[error("matrix is not Hermitian (residue {0:.3e})")]
    NotHermitian(f64),

    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("function is not finite at eigenvalue {0}")]
    NonFinite(f64),

    #[error("remez exchange did not converge after {iterations} iterations (degree {degree}, tau {tau})")]
    NoConvergence {
        degree: usize,
        tau: f64,
        iterations: usize,
    },

    #[error("no degree up to {cap} reaches error {threshold:e}")]
    DegreeCapExceeded { cap: usize, threshold: f64 },

    #[error("point {x} lies outside [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),

    #[error("invalid config: {}", join_issues(.0))]
    Config(Vec<FieldIssue>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One failed check on a named configuration field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldIssue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`: {}", self.field, self.message)
    }
}

fn join_issues(issues: &[FieldIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
