//! Command-line harness: JSON case configuration, refinement runs, reports.

pub mod commands;
pub mod config;
pub mod oracle;
pub mod output;
pub mod pipeline;

use harmap_core::analytic::AnalyticError;
use harmap_core::gridio::GridIoError;
use harmap_core::SolverError;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub use commands::{cmd_convergence, cmd_solve, cmd_sweep, cmd_verify, RunOptions};
pub use config::CaseConfig;

/// Process exit codes.
pub mod exit {
    pub const HOLDS: i32 = 0;
    pub const VIOLATED: i32 = 1;
    pub const UNDEFINED: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const NOT_CONVERGED: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    GridIo(#[from] GridIoError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(SolverError::NotConverged { .. }) => exit::NOT_CONVERGED,
            _ => exit::CONFIG,
        }
    }
}
