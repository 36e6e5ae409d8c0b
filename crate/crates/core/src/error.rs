use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration is inconsistent or violates a stability bound.
    #[error("configuration error: {0}")]
    Config(String),

    /// Time integration produced non-finite values.
    #[error("non-finite values at step {step} (max |P| = {max_abs:e})")]
    NonFinite { step: usize, max_abs: f64 },

    /// Snapshot (de)serialization failure.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
