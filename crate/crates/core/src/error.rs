use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant onto a stable exit code.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violates a structural invariant (mass, labels, shapes, ranges).
    #[error("validation error: {0}")]
    Validation(String),
    /// Inputs are well formed but the requested quantity does not exist for them.
    #[error("domain error: {0}")]
    Domain(String),
    /// A joint distribution does not carry the Markov structure an evaluator relies on.
    #[error("model error: {0}")]
    Model(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
