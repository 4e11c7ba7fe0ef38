use super::{ModelConfig, ModelError, Result};
use crate::tensor::Tensor;
use crate::vision::{patchify, FrameSet, RawImage, TileGrid};

/// Pixels for one media reference in a conversation.
#[derive(Debug, Clone, PartialEq)]
pub enum Media {
    Image(TileGrid),
    Video(FrameSet),
}

impl Media {
    /// Sub-images in encoding order: tiles then the global view, or frames.
    pub fn sub_images(&self) -> Vec<&RawImage> {
        match self {
            Media::Image(grid) => grid.sub_images().collect(),
            Media::Video(frames) => frames.frames().iter().collect(),
        }
    }
}

/// Patch matrices for the media a sequence refers to, in stream order.
pub fn media_patches(media: &[Media], refs: &[usize], cfg: &ModelConfig) -> Result<Vec<Tensor>> {
    let mut out = Vec::new();
    for &r in refs {
        let item = media.get(r).ok_or(ModelError::MediaRef(r))?;
        for img in item.sub_images() {
            if img.width() != cfg.tile_size || img.height() != cfg.tile_size {
                return Err(ModelError::TileSize {
                    width: img.width(),
                    height: img.height(),
                    tile: cfg.tile_size,
                });
            }
            out.push(patchify(img, cfg.patch)?);
        }
    }
    Ok(out)
}
