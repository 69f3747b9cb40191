use thiserror::Error;

/// Errors raised by the model, penalty, solver and data layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("sample index {index} out of range for {n} samples")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset must have at least one sample and one feature")]
    EmptyDataset,

    #[error("group penalty requires a group partition")]
    MissingGroups,

    #[error("{0} is only defined for SCAD and MCP penalties")]
    ConvexPenalty(&'static str),

    #[error("constrained prox bisection did not converge after {0} iterations")]
    ProxBisection(usize),

    #[error("point is infeasible: penalty value {value} exceeds radius {rho}")]
    Infeasible { value: f64, rho: f64 },

    #[error("{operation} requires retained table iterates (enable retain_phi)")]
    PhiNotRetained { operation: &'static str },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
