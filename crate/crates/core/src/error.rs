use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A record could not be decoded. `location` is a 1-based line number for
    /// the text format and a byte offset for the binary format.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// A decoded record violates the sensor geometry.
    #[error("invalid record {index}: {message}")]
    Validation { index: usize, message: String },

    /// Argument outside the domain of an analytic function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Caller broke a documented precondition (shape mismatch, empty mask, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("objective returned a non-finite value {value} at ({vx}, {vy})")]
    NonFinite { value: f64, vx: f64, vy: f64 },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
