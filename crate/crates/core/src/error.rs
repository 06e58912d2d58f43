//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CnlError>;

#[derive(Debug, Error)]
pub enum CnlError {
    /// Two inputs that must agree in size do not.
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Model parameters violate a structural invariant.
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// A numeric argument is outside its admissible range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An assortment or solution violates the constraint set.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A nest weight fell outside the bounds the approximation was built on.
    #[error("nest {nest}: weight {weight} outside [{lower}, {upper}] (stale bounds?)")]
    BoundViolation {
        nest: usize,
        weight: f64,
        lower: f64,
        upper: f64,
    },

    /// Exhaustive search refused because the problem is too large.
    #[error(
        "{size} binary decisions exceed the exhaustive search cap of {cap}; \
         emit the MILP with `build-milp` and solve it externally"
    )]
    CapExceeded { size: usize, cap: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CnlError {
    pub(crate) fn dim(what: &'static str, expected: usize, got: usize) -> Self {
        CnlError::Dimension {
            what,
            expected,
            got,
        }
    }

    /// True when the error signals bad or infeasible input rather than a
    /// resource limit.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, CnlError::CapExceeded { .. } | CnlError::Io(_))
    }
}
