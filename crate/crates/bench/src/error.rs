use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] eln_core::Error),
    #[error("{0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("malformed grid file: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;

pub(crate) fn invalid(msg: impl Into<String>) -> BenchError {
    BenchError::Invalid(msg.into())
}
