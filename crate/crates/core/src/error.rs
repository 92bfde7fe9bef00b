use thiserror::Error;

/// Errors raised by testers, estimators and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The caller broke an API contract (bad argument, wrong call order,
    /// incompatible configuration).
    #[error("usage error: {0}")]
    Usage(String),
    /// An input lies outside the domain of the operation (non-binary symbol,
    /// boundary probability, non-stationary parameters, non-finite value).
    #[error("domain error: {0}")]
    Domain(String),
    /// A computed quantity left its valid range, typically a degenerate
    /// maximum-likelihood estimate.
    #[error("numeric domain error: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn numeric(msg: impl Into<String>) -> Error {
    Error::Numeric(msg.into())
}
