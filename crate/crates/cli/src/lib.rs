//! Command-line frontend for the `vqe-natgrad` optimizers: run presets or
//! custom configs, inspect metrics at a point, and render trajectories.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config files or input files.
    #[error("{0}")]
    Config(String),
    /// Failures while computing or writing results.
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
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<vqe_natgrad::Error> for CliError {
    fn from(e: vqe_natgrad::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
