//! Toy vision-language model: patch-embedding encoder, pixel shuffle, MLP
//! projector and a causal decoder with rotary positions.

mod config;
mod generate;
mod media;
mod train;
mod vlm;

pub use config::{ModelConfig, CONTEXT_LIMITS};
pub use generate::Generation;
pub use media::{media_patches, Media};
pub use train::{
    example_loss, loss_and_grads, train_step, Adam, AdamConfig, LogRow, LrSchedule, StepStats, TrainExample, TrainLog,
};
pub use vlm::{apply_rope, Bound, TowerCounts, ToyVlm};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model config: {0}")]
    Config(String),
    #[error("{placeholders} placeholders but {visual} visual tokens")]
    PlaceholderMismatch { placeholders: usize, visual: usize },
    #[error("expected {expected} patches per tile, got {got}")]
    PatchCount { expected: usize, got: usize },
    #[error("sub-image is {width}x{height}, model expects {tile}x{tile}")]
    TileSize { width: usize, height: usize, tile: usize },
    #[error("projector expects {expected} channels, got {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("sequence of {len} tokens exceeds context limit {limit}")]
    ContextOverflow { len: usize, limit: usize },
    #[error("missing parameter {0}")]
    MissingParam(String),
    #[error("parameter {name} has shape {got:?}, expected {expected:?}")]
    ParamShape {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("sequence refers to media item {0} which was not supplied")]
    MediaRef(usize),
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
    #[error(transparent)]
    Compress(#[from] crate::compress::CompressError),
    #[error(transparent)]
    Vision(#[from] crate::vision::VisionError),
    #[error(transparent)]
    Kv(#[from] crate::kv::KvError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("training log: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
