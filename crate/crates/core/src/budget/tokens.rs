use super::PipelineConfig;
use crate::vision::{capped_dims, grid_layout, GridLayout};

/// Token accounting for one image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageTokens {
    pub layout: GridLayout,
    /// Tiles plus the global view.
    pub sub_images: usize,
    /// Placeholders filled with visual tokens.
    pub visual: usize,
    /// One learned position token per tile and one global-image token.
    pub markers: usize,
}

impl ImageTokens {
    pub fn total(&self) -> usize {
        self.visual + self.markers
    }
}

/// Tokens an image of `width × height` occupies after capping, tiling and shuffling.
pub fn image_token_count(cfg: &PipelineConfig, width: usize, height: usize) -> ImageTokens {
    let (w, h) = capped_dims(width, height, cfg.longest_edge_cap);
    let layout = grid_layout(w, h, cfg.tile_size);
    let sub_images = layout.sub_images();
    ImageTokens {
        layout,
        sub_images,
        visual: sub_images * cfg.tokens_per_tile(),
        markers: layout.tile_count() + 1,
    }
}

/// Visual tokens for a video of `frames` frames.
pub fn video_token_count(cfg: &PipelineConfig, frames: usize) -> usize {
    frames * cfg.frame_tokens()
}
