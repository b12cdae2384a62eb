use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("index {index} out of range (valid: 0..={max})")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("unsupported operation: {0}")]
    Unsupported(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("enumeration of {size} trajectories exceeds the cap of {cap}")]
    EnumerationTooLarge { size: f64, cap: f64 },
    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { iteration: usize, what: String },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
