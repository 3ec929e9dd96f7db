use std::path::PathBuf;

use thiserror::Error;

/// Exit code for success or a passing gate.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_WARN: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INTERNAL: i32 = 70;

#[derive(Debug, Error)]
pub enum GateError {
    /// Bad arguments, missing or malformed input files, invalid policies.
    #[error("{0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("cannot write {path}: {source}")]
    StoreWrite { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Internal(String),
}

impl GateError {
    pub fn config(message: impl Into<String>) -> Self {
        GateError::Config(message.into())
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        GateError::Parse { path: path.into(), message: message.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            GateError::Config(_) | GateError::Read { .. } | GateError::Parse { .. } => EXIT_USAGE,
            GateError::StoreWrite { .. } | GateError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

pub type Result<T, E = GateError> = std::result::Result<T, E>;
