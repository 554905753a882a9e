//! Configuration, figure presets, sweeps and file output for `xxzsim`.

pub mod config;
pub mod experiment;
pub mod output;
pub mod presets;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: configuration, grid, arguments or an occupied output directory.
    #[error("{0}")]
    Validation(String),
    /// Anything that fails after the inputs were accepted.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Runtime(format!("{}: {err}", path.display()))
    }
}

impl From<xxz_core::Error> for CliError {
    fn from(e: xxz_core::Error) -> Self {
        match e {
            xxz_core::Error::Parameter { .. } | xxz_core::Error::Capacity { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
