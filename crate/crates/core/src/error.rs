use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("reflection or degenerate linear block (determinant {det:e})")]
    ReflectionOrDegenerate { det: f64 },

    #[error(
        "not a similarity: block deviates from scaled rotation by {deviation:e} (tolerance {tolerance:e})"
    )]
    NotASimilarity { deviation: f64, tolerance: f64 },

    #[error("transform is not invertible")]
    NotInvertible,

    #[error("insufficient correspondences: {found} pairs, at least 3 required")]
    InsufficientCorrespondences { found: usize },

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("no overlap: no correspondences within range at iteration {iteration}")]
    NoOverlap { iteration: usize },

    #[error("frame mismatch: expected '{expected}', found '{found}'")]
    FrameMismatch { expected: String, found: String },

    #[error("invalid transform: {0}")]
    InvalidTransform(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("validation error at row {row}: {message}")]
    Validation { row: usize, message: String },

    /// The OS error is part of the message rather than a chained source,
    /// so one-line renderings do not repeat it.
    #[error("{}: {cause}", path.display())]
    Io { path: PathBuf, cause: std::io::Error },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }
}
