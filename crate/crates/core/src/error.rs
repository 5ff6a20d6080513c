use thiserror::Error;

/// Errors produced by the estimators, tests and simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("scale entry {index} must be strictly positive, got {value}")]
    InvalidScale { index: usize, value: f64 },

    #[error("degenerate sample: observation {row} coincides with the estimated center")]
    DegenerateSample { row: usize },

    #[error("cannot initialize solver: column {column} has zero sample variance")]
    Initialization { column: usize },

    #[error("column {column} is degenerate (zero spread)")]
    DegenerateColumn { column: usize },

    #[error("sample too small: need at least {needed} observations, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("dimension too small: need at least {needed} variables, got {got}")]
    DimensionTooSmall { needed: usize, got: usize },

    #[error("level must lie strictly inside (0, 1), got {0}")]
    InvalidLevel(f64),

    #[error("invalid scenario specification: {0}")]
    InvalidSpec(String),

    #[error("invalid experiment plan: {0}")]
    PlanValidation(String),

    #[error("need at least {needed} replications, got {got}")]
    InsufficientReplications { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
