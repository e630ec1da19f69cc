use thiserror::Error;

/// Errors surfaced by the multiset kernel.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A caller violated an operation precondition (bad index, mismatched
    /// universes, malformed input).
    #[error("usage error: {0}")]
    Usage(String),
    /// A guarded computation would exceed its configured budget.
    #[error("resource error: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
