use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("enumeration of a {n}x{m} grid refused (limit {limit})")]
    TooLarge { n: usize, m: usize, limit: usize },
    #[error("infinite divergence: q[{index}] = 0 where p > 0")]
    InfiniteDivergence { index: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
