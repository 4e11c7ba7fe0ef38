//! Analytic accounting: visual-token counts, KV-cache and RAM estimates,
//! encoder/LM parameter splits and data-mixture schedules.

mod config;
mod memory;
mod mixture;
mod report;
mod tokens;

pub use config::{PipelineConfig, Workload, PRESET_NAMES};
pub use memory::{
    allocation_report, kv_cache_bytes, ram_estimate, Allocation, RamEstimate, Regime, FIXED_OVERHEAD_BYTES,
};
pub use mixture::{plan_mixture, MixturePlan, MixtureSpec};
pub use report::{compare_configs, write_csv, BudgetReport};
pub use tokens::{image_token_count, video_token_count, ImageTokens};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BudgetError {
    #[error("pipeline config: {0}")]
    Config(String),
    #[error("mixture: {0}")]
    Mixture(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("no configurations to compare")]
    Empty,
    #[error(transparent)]
    Kv(#[from] crate::kv::KvError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = BudgetError> = std::result::Result<T, E>;
