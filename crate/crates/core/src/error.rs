use thiserror::Error;

/// Errors produced by measure construction, estimation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure at node {word:?}: {reason}")]
    InvalidMeasure { word: String, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "support violation at {point} (r = {radius:e}): nu has positive mass where mu has none"
    )]
    SupportViolation { point: String, radius: f64 },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
