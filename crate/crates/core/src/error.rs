use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported dimension {dim}: {reason}")]
    Dimension { dim: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A quadrature produced a non-finite sample.
    #[error("non-finite integrand value at node {node}")]
    NonFinite { node: usize },

    /// The a-posteriori error estimate exceeds the requested tolerance.
    #[error("{level} quadrature did not converge: estimate {estimate:e} for value {value:e}")]
    NonConvergence {
        level: String,
        value: f64,
        estimate: f64,
    },

    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),

    #[error("degenerate fit: {0}")]
    Fit(String),
}
