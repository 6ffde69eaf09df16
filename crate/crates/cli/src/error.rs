use std::path::{Path, PathBuf};

use thiserror::Error;

/// Everything a command can fail with, mapped onto stable exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] panolayout_core::Error),
    #[error("registration failed: {0}")]
    Registration(panolayout_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn schema(path: &Path, message: impl Into<String>) -> Self {
        CliError::Schema { path: path.to_path_buf(), message: message.into() }
    }

    /// 2 for registration failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Registration(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
