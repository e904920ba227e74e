use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("derivative undefined at center")]
    DerivativeUndefined,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("psi requires all-Gaussian ELN")]
    NotAllGaussian,
    #[error("singular Gram system; increase γ1")]
    SingularGram,
    #[error("fixed-point system singular; adjust γ2′ or σ")]
    SingularFixedPoint,
    #[error("IRLS weight has no finite limit at e = 0")]
    IrlsWeightUndefined,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
