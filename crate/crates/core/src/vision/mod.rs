//! Image and video frontend: PPM I/O, longest-edge capping, tiling, frame
//! sampling/averaging and patch extraction.

mod image;
mod patch;
mod tiling;
mod video;

pub use image::{capped_dims, resize_longest_edge, RawImage};
pub use patch::{patchify, unpatchify};
pub use tiling::{
    grid_layout, preprocess_image, split_into_tiles, tiling_canvas, GridLayout, Tile, TileGrid, MAX_GRID,
};
pub use video::{average_frames, sample_frames, sample_indices, FrameSet, FrameSource};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum VisionError {
    #[error("image must be at least 1x1, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("{width}x{height} RGB image needs {} bytes, got {got}", width * height * 3)]
    PixelCount { width: usize, height: usize, got: usize },
    #[error("crop {w}x{h} at ({x0},{y0}) leaves the {width}x{height} image")]
    CropOutOfBounds {
        x0: usize,
        y0: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },
    #[error("{what} {value} is not divisible by {by}")]
    NotDivisible {
        what: &'static str,
        value: usize,
        by: usize,
    },
    #[error("video has no frames")]
    EmptyVideo,
    #[error("malformed PPM: {0}")]
    Ppm(String),
    #[error("cannot open {path}: {source}")]
    Open { path: String, source: std::io::Error },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Kv(#[from] crate::kv::KvError),
    #[error(transparent)]
    Tensor(#[from] crate::tensor::TensorError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = VisionError> = std::result::Result<T, E>;
