//! Experiment runner around `esq-core`: strict TOML configs in, CSV/text
//! artifacts plus a digest manifest out. Exit codes are part of the
//! contract: 0 success, 2 config error, 3 audit failure (a condition,
//! envelope, drift, or distance-bracket check did not hold — the outputs
//! are still written so the failure can be inspected).

pub mod commands;
pub mod config;
pub mod manifest;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Config(#[from] config::ConfigError),
    #[error("audit failed: {0}")]
    Audit(String),
    #[error("{0}")]
    Sim(#[from] esq_core::simulator::SimError),
    #[error("{0}")]
    Analysis(#[from] esq_core::analysis::AnalysisError),
    #[error("{0}")]
    Law(#[from] esq_core::model::LawError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 2,
            AppError::Audit(_) => 3,
            _ => 1,
        }
    }
}
