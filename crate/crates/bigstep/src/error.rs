use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("point {index} has zero norm; margin is undefined")]
    ZeroNormPoint { index: usize },

    #[error("point {index} has norm {norm} > 1; normalize the data first")]
    NormTooLarge { index: usize, norm: f64 },

    #[error("dataset is not linearly separable (best achievable margin {margin})")]
    NonSeparable { margin: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("non-finite value produced at step {step}")]
    Numerical { step: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("discriminant {value} is not positive; parameters outside the admissible range")]
    NegativeDiscriminant { value: f64 },

    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),

    #[error("empty input: {0}")]
    EmptyInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
