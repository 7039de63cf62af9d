use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A matrix function or scalar helper was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("overflow: {0}")]
    Overflow(String),

    /// The objective of a θ-infimum could not be evaluated anywhere on the grid.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("enumeration refused: {count} sequences exceed the cap of {cap}")]
    CapExceeded { count: u128, cap: u128 },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
