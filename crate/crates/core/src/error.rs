use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the region where the formula or estimator is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A draw or sample budget exceeded its configured cap, or a finite
    /// sample stream ran dry.
    #[error("resource exceeded: {0}")]
    ResourceExceeded(String),

    /// The assembled estimate overflowed or became NaN.
    #[error("non-finite estimate: {0}")]
    NonFinite(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::ResourceExceeded(msg.into())
    }
}
