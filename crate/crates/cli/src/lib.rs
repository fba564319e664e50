//! Library behind the `folbm` binary: configuration handling, the
//! `simulate`, `density` and `verify` commands, and the verification suite.
//!
//! Exit codes: 0 on success, 1 when a verified property fails or a run
//! aborts, 2 on configuration errors.

pub mod commands;
pub mod config;
pub mod fields;
pub mod verify;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Library(#[from] folbm::Error),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Library(_) | Self::Io { .. } => 1,
        }
    }
}

/// Environment variable capping the worker thread count.
pub const THREADS_VAR: &str = "FOLBM_THREADS";

/// Builds the global worker pool from `FOLBM_THREADS` when it is set.
pub fn configure_threads(value: Option<&str>) -> Result<(), ConfigError> {
    let Some(value) = value else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError::invalid(THREADS_VAR, format!("expected a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| ConfigError::invalid(THREADS_VAR, e.to_string()))
}
