use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Bad caller input: out-of-range qubit, duplicate target, bad m.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A constructed object failed its own invariant (e.g. non-unitary gate).
    #[error("validation failed: {0}")]
    Validation(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Request exceeds what the exact engines are sized for.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("internal logic error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
