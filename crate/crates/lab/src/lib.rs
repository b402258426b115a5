//! Configuration, orchestration and artifact IO for the packet laboratory.

pub mod artifacts;
pub mod calculus;
pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

pub use commands::{run, Outcome, RunOptions, RunReport};
pub use config::{Command, FamilySpec, RunConfig};

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] pevol_core::Error),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("no records to emit")]
    Empty,
}

impl LabError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}
