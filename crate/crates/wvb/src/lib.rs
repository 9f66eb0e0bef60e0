//! Synthetic weak-value campaigns on top of `wvb-core`: Poisson detector
//! simulation, file formats, run manifests and the `wvb` command set.

use thiserror::Error;

pub mod commands;
pub mod io;
pub mod manifest;
pub mod sampling;

pub use wvb_core as core;

/// Failure of a command, carrying its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Exit 1: the result does not meet the acceptance bound.
    #[error("{0}")]
    Acceptance(String),
    /// Exit 2: invalid configuration.
    #[error("{0}")]
    Config(String),
    /// Exit 3: unreadable or unwritable files.
    #[error("{0}")]
    Io(String),
    /// Exit 4: required data absent.
    #[error("{0}")]
    MissingData(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Acceptance(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::MissingData(_) => 4,
        }
    }
}

/// Reads `WVB_THREADS`; `None` when unset.
pub fn thread_limit() -> Result<Option<usize>, CliError> {
    match std::env::var("WVB_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("WVB_THREADS={v:?}: expected a positive integer"))),
        },
    }
}
