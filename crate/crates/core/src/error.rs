use thiserror::Error;

/// Errors raised by the simulation, likelihood and estimation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A result is not representable in `f64` (use the scaled variant).
    #[error("overflow: {0}")]
    Overflow(String),

    /// Invalid model parameters or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Observations inconsistent with the model.
    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Data(format!("json: {e}"))
    }
}
