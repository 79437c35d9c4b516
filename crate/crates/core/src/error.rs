use thiserror::Error;

/// Errors raised by the library. The first three are input-validation
/// failures; `Numerical` reports a diagnostic failure of a computation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("outside admissible window: {0}")]
    Window(String),
    #[error("size limit exceeded: {0}")]
    TooLarge(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
