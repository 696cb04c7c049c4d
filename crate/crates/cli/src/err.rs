//! Error taxonomy mapped to process exit codes: problems the user can fix
//! (bad flags, missing or malformed inputs, stage-order violations) exit
//! with 2; unexpected failures (IO mid-write, serialization bugs) exit
//! with 1. Success is 0.

use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Internal(#[from] anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Internal(_) => ExitCode::from(1),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
