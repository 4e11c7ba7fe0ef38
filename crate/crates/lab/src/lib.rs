//! Synthetic tasks, training runs and ablation sweeps over the toy pipeline.

pub mod ablate;
pub mod dataset;
pub mod pipeline;
pub mod tasks;
pub mod train;

pub use ablate::{run_ablation, run_setting, write_ablation_csv, AblationConfig, AblationRow, Axis};
pub use dataset::{load_dataset, save_dataset, DatasetManifest};
pub use pipeline::Pipeline;
pub use tasks::{Sample, SampleMedia, TaskKind, TaskSet};
pub use train::{evaluate, fit, Evaluation, FitConfig, FitReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{0}")]
    Invalid(String),
    #[error("dataset {path}: {message}")]
    Dataset { path: String, message: String },
    #[error(transparent)]
    Model(#[from] smolpipe_core::model::ModelError),
    #[error(transparent)]
    Prompt(#[from] smolpipe_core::prompt::PromptError),
    #[error(transparent)]
    Vision(#[from] smolpipe_core::vision::VisionError),
    #[error(transparent)]
    Kv(#[from] smolpipe_core::kv::KvError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
