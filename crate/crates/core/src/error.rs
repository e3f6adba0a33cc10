use std::path::PathBuf;

use thiserror::Error;

/// Library-wide error type.
///
/// The variants fall into three families that the command line tool maps to
/// distinct exit codes: configuration problems, I/O problems and shape
/// mismatches. See [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported or malformed image {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("frame sequence has a gap: index {index} is missing in {dir}")]
    Gap { dir: PathBuf, index: usize },

    #[error("no frames matching {pattern} in {dir}")]
    EmptySequence { dir: PathBuf, pattern: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("accumulator is empty (count = 0)")]
    EmptyAccumulator,

    #[error("index {index} out of range 1..={len}")]
    OutOfRange { index: usize, len: usize },

    #[error("latent state is already at t = 0")]
    CannotStep,

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("keypoint {0} has no sample above the confidence threshold")]
    Untrackable(i64),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the `patchblend` binary: 2 for
    /// configuration errors, 3 for I/O and file format errors, 4 for shape
    /// mismatches.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Schedule(_)
            | Error::OutOfRange { .. }
            | Error::Json(_)
            | Error::CannotStep => 2,
            Error::Io { .. }
            | Error::Format { .. }
            | Error::Gap { .. }
            | Error::EmptySequence { .. }
            | Error::Csv(_)
            | Error::Untrackable(_) => 3,
            Error::Shape(_) | Error::EmptyAccumulator => 4,
        }
    }
}
