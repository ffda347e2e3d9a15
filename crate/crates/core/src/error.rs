use thiserror::Error;

/// Errors produced anywhere in the encoding pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dictionary hash mismatch: expected {expected}, found {found}")]
    HashMismatch { expected: String, found: String },

    #[error("degenerate dictionary: {0}")]
    DegenerateDictionary(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("zero variance in channel (joint {joint}, dim {dim})")]
    ZeroVariance { joint: usize, dim: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("class separation could not be satisfied: {0}")]
    Separation(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn mismatch(msg: impl Into<String>) -> Error {
    Error::DimensionMismatch(msg.into())
}
