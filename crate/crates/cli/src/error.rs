use std::path::{Path, PathBuf};

use cuspflow::FlowError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: u64, msg: String },

    #[error("{0}")]
    Flow(#[from] FlowError),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 stiffness, 3 I/O and unreadable data, 4 usage and configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 4,
            CliError::Io { .. } | CliError::Parse { .. } => 3,
            CliError::Flow(e) => match e {
                FlowError::Stiffness { .. } => 2,
                FlowError::Io(_) | FlowError::Format(_) => 3,
                FlowError::Config(_) | FlowError::Degenerate(_) => 4,
                _ => 1,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
