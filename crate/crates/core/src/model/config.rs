use std::path::Path;

use super::{ModelError, Result};
use crate::kv::KvMap;

/// Context lengths a model may be built for.
pub const CONTEXT_LIMITS: [usize; 2] = [8192, 16384];

/// Geometry and hyperparameters of a [`ToyVlm`](super::ToyVlm).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub d_vision: usize,
    pub vision_heads: usize,
    pub d_model: usize,
    pub n_layers_vision: usize,
    pub n_layers_lm: usize,
    pub n_heads: usize,
    pub head_dim: usize,
    pub vocab_size: usize,
    /// Hidden width multiplier of every feed-forward block.
    pub ffn_mult: usize,
    pub patch: usize,
    pub tile_size: usize,
    pub shuffle_r: usize,
    pub rope_base: f64,
    pub context_limit: usize,
}

impl ModelConfig {
    /// Small captioning model: 32-pixel tiles, 8-pixel patches, 2× shuffle.
    pub fn toy(vocab_size: usize) -> Self {
        Self {
            d_vision: 32,
            vision_heads: 2,
            d_model: 64,
            n_layers_vision: 1,
            n_layers_lm: 2,
            n_heads: 4,
            head_dim: 16,
            vocab_size,
            ffn_mult: 4,
            patch: 8,
            tile_size: 32,
            shuffle_r: 2,
            rope_base: 10_000.0,
            context_limit: 8192,
        }
    }

    /// Three sizes whose vision/LM split mimics the small, medium and large
    /// presets of the budget planner.
    pub fn ladder(vocab_size: usize) -> [(&'static str, Self); 3] {
        let base = Self::toy(vocab_size);
        let with = |d_model: usize, n_heads: usize, n_layers_lm: usize, d_vision: usize, ctx: usize| Self {
            d_model,
            n_heads,
            head_dim: d_model / n_heads,
            n_layers_lm,
            d_vision,
            context_limit: ctx,
            ..base.clone()
        };
        [
            ("toy-256m", with(64, 4, 2, 32, 8192)),
            ("toy-500m", with(96, 6, 2, 32, 8192)),
            ("toy-2.2b", with(192, 12, 2, 64, 16384)),
        ]
    }

    pub fn patches_per_side(&self) -> usize {
        self.tile_size / self.patch
    }

    pub fn patches_per_tile(&self) -> usize {
        self.patches_per_side().pow(2)
    }

    /// Visual tokens handed to the LM per sub-image, after pixel shuffle.
    pub fn tokens_per_tile(&self) -> usize {
        (self.patches_per_side() / self.shuffle_r).pow(2)
    }

    pub fn shuffled_channels(&self) -> usize {
        self.d_vision * self.shuffle_r * self.shuffle_r
    }

    pub fn patch_dim(&self) -> usize {
        self.patch * self.patch * 3
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ModelError::Config(m));
        let dims = [
            ("d_vision", self.d_vision),
            ("vision_heads", self.vision_heads),
            ("d_model", self.d_model),
            ("n_heads", self.n_heads),
            ("head_dim", self.head_dim),
            ("vocab_size", self.vocab_size),
            ("ffn_mult", self.ffn_mult),
            ("patch", self.patch),
            ("tile_size", self.tile_size),
            ("shuffle_r", self.shuffle_r),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return bad(format!("{name} must be positive"));
        }
        if self.d_model != self.n_heads * self.head_dim {
            return bad(format!(
                "d_model {} != n_heads {} x head_dim {}",
                self.d_model, self.n_heads, self.head_dim
            ));
        }
        if !self.head_dim.is_multiple_of(2) {
            return bad(format!("head_dim {} must be even", self.head_dim));
        }
        if !self.d_vision.is_multiple_of(self.vision_heads) {
            return bad(format!(
                "d_vision {} is not divisible by vision_heads {}",
                self.d_vision, self.vision_heads
            ));
        }
        if !self.tile_size.is_multiple_of(self.patch) {
            return bad(format!(
                "tile_size {} is not a multiple of patch {}",
                self.tile_size, self.patch
            ));
        }
        if !self.patches_per_side().is_multiple_of(self.shuffle_r) {
            return bad(format!(
                "{} patches per side are not divisible by shuffle_r {}",
                self.patches_per_side(),
                self.shuffle_r
            ));
        }
        if !(self.rope_base > 1.0 && self.rope_base.is_finite()) {
            return bad(format!("rope_base {} must exceed 1", self.rope_base));
        }
        if !CONTEXT_LIMITS.contains(&self.context_limit) {
            return bad(format!("context_limit {} must be 8192 or 16384", self.context_limit));
        }
        Ok(())
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.insert("d_vision", self.d_vision);
        kv.insert("vision_heads", self.vision_heads);
        kv.insert("d_model", self.d_model);
        kv.insert("n_layers_vision", self.n_layers_vision);
        kv.insert("n_layers_lm", self.n_layers_lm);
        kv.insert("n_heads", self.n_heads);
        kv.insert("head_dim", self.head_dim);
        kv.insert("vocab_size", self.vocab_size);
        kv.insert("ffn_mult", self.ffn_mult);
        kv.insert("patch", self.patch);
        kv.insert("tile_size", self.tile_size);
        kv.insert("shuffle_r", self.shuffle_r);
        kv.insert("rope_base", self.rope_base);
        kv.insert("context_limit", self.context_limit);
        kv
    }

    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        kv.deny_unknown(&[
            "d_vision",
            "vision_heads",
            "d_model",
            "n_layers_vision",
            "n_layers_lm",
            "n_heads",
            "head_dim",
            "vocab_size",
            "ffn_mult",
            "patch",
            "tile_size",
            "shuffle_r",
            "rope_base",
            "context_limit",
        ])?;
        let cfg = Self {
            d_vision: kv.require("d_vision")?,
            vision_heads: kv.get_or("vision_heads", 1)?,
            d_model: kv.require("d_model")?,
            n_layers_vision: kv.require("n_layers_vision")?,
            n_layers_lm: kv.require("n_layers_lm")?,
            n_heads: kv.require("n_heads")?,
            head_dim: kv.require("head_dim")?,
            vocab_size: kv.require("vocab_size")?,
            ffn_mult: kv.get_or("ffn_mult", 4)?,
            patch: kv.require("patch")?,
            tile_size: kv.require("tile_size")?,
            shuffle_r: kv.require("shuffle_r")?,
            rope_base: kv.get_or("rope_base", 10_000.0)?,
            context_limit: kv.get_or("context_limit", 8192)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvMap::load(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(self.to_kv().save(path)?)
    }
}
