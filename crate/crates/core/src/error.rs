//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty set: {0}")]
    EmptySet(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An enumeration, grid, or sample budget was exceeded. The harness
    /// maps this variant to its own exit code.
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("radial evaluator returned a nonpositive or nonfinite radius: {0}")]
    BadRadialValue(f64),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn budget(msg: impl Into<String>) -> Self {
        Error::BudgetExceeded(msg.into())
    }
}

/// Finite and strictly positive; NaN fails.
pub(crate) fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}
