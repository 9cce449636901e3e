use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A numeric argument is outside the domain of the operation
    /// (non-finite value, non-positive step size, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An arc-length query outside `[0, total_length]`.
    #[error("arc length {s} is outside the path range [0, {total}]")]
    Range { s: f64, total: f64 },

    /// Invalid configuration, reported against the offending field.
    #[error("invalid configuration at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        Error::Domain(message.into())
    }

    /// True for errors caused by a bad scenario description rather than I/O.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::Parse(_) | Error::Domain(_) | Error::Range { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
