use std::path::Path;

use thiserror::Error;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config files or input data (exit 2).
    #[error("{0}")]
    Config(String),
    /// Integration or I/O failure after the inputs were accepted (exit 3).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub(crate) fn read(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Config(format!("cannot read {}: {err}", path.display()))
    }

    pub(crate) fn write(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("cannot write {}: {err}", path.display()))
    }
}

impl From<qubit_purification::Error> for CliError {
    fn from(e: qubit_purification::Error) -> Self {
        use qubit_purification::Error as E;
        match e {
            E::Domain(_) | E::InvalidConfig(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    /// A statistical or numerical check did not meet its threshold (exit 1).
    CheckFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::CheckFailed => 1,
        }
    }
}
