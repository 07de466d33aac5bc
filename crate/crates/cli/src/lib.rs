//! Batch experiment runner over the `cdkit` pipelines.
//!
//! A run resolves an [`ExperimentConfig`] (TOML file plus command-line flags), executes
//! its grid of points on a worker pool, and writes `results.csv` and `manifest.json`
//! once, from the ordered result list.

pub mod config;
pub mod plot;
pub mod runner;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{ExperimentConfig, ModelConfig, Overrides, Pipeline, SweepConfig, SweepParameter};
pub use runner::{execute, Report};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{origin}: {message}")]
    Config { origin: String, message: String },

    #[error(transparent)]
    Pipeline(#[from] cdkit::CdError),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{0}")]
    Output(String),
}

impl CliError {
    /// 0 success, 1 pipeline failure, 2 usage or configuration error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Pipeline(_) | CliError::Io { .. } | CliError::Output(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
