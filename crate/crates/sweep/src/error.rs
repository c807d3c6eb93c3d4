use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid config field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] cv2x_core::Error),

    #[error("refusing to write an empty table")]
    EmptyRows,
}

impl SweepError {
    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        SweepError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SweepError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            SweepError::Parse { .. } => 2,
            SweepError::Validation { .. } => 3,
            SweepError::Io { .. } => 4,
            SweepError::Model(_) | SweepError::EmptyRows => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, SweepError>;
