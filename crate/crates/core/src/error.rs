use thiserror::Error;

/// Errors shared across the weighting, grouping, and testbed modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid task count {got}: at least 2 tasks are required")]
    InvalidTaskCount { got: usize },

    #[error("nonpositive risk {value} at task {index}")]
    NonpositiveRisk { index: usize, value: f64 },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("smoothness vector is not on the probability simplex (sum = {sum})")]
    InvalidSimplex { sum: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid group count {k} for {m} tasks (need 2 <= k <= m)")]
    InvalidK { k: usize, m: usize },

    #[error("assignment matrix is singular (empty group)")]
    SingularAssignment,

    #[error("invalid assignment matrix: {0}")]
    InvalidAssignment(String),

    #[error("operation requires the {expected} strategy, state holds {got}")]
    WrongStrategy {
        expected: &'static str,
        got: String,
    },

    #[error("training diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("baseline metric {index} is zero; relative drop is undefined")]
    ZeroBaseline { index: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
