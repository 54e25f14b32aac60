use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a type invariant (weights, distinctness, sizes, ...).
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    DimensionMismatch {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    /// Two measure representations live on different node sets.
    #[error("structural mismatch: {0}")]
    Structural(String),

    /// An exponential moment overflowed even after log-space accumulation.
    #[error("exponential moment overflows: log-value {log_value:e} dominated by node {node}")]
    Magnitude { node: usize, log_value: f64 },

    #[error("improper function: every value is -inf")]
    Improper,

    #[error("point {point:?} is not on the grid")]
    GridLookup { point: Vec<f64> },

    #[error("precondition failed: {what} (residual {residual:e})")]
    Precondition { what: String, residual: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("measure is not absolutely continuous with respect to the base: {0}")]
    NotAbsolutelyContinuous(String),
}
