use thiserror::Error;

/// Errors raised by the library. Every failure is an argument/precondition
/// violation; numerical routines never fail once their inputs validate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("depth {depth} must be below the subsample size {subsample}")]
    DepthTooLarge { depth: usize, subsample: usize },

    #[error("feature kind mismatch: operation needs {0}")]
    WrongFeatureKind(&'static str),

    #[error("exact enumeration limit exceeded: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
