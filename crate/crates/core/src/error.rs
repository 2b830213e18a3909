//! Error type shared across the crate.

use std::fmt;

#[derive(Debug)]
pub enum Error {
    /// Input outside the mathematical domain of an operation (non-finite,
    /// negative where nonnegative is required, zero where excluded).
    Domain(String),
    /// Inconsistent grid geometry or mismatched fields.
    Grid(String),
    /// Bad experiment configuration.
    Config(String),
    /// Numerical failure inside an iteration (NaN in a line search, a
    /// bracket that cannot be established).
    Numerical(String),
    Io(std::io::Error),
    /// Malformed binary or CSV payload.
    Format(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Grid(m) => write!(f, "grid error: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Numerical(m) => write!(f, "numerical error: {m}"),
            Error::Io(e) => write!(f, "io error: {e}"),
            Error::Format(m) => write!(f, "format error: {m}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
