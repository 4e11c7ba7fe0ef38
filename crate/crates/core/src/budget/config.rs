use std::path::Path;

use super::{BudgetError, Result};
use crate::kv::KvMap;

pub const PRESET_NAMES: [&str; 3] = ["smolvlm-256m", "smolvlm-500m", "smolvlm-2.2b"];

const PRESETS: [&str; 3] = [
    include_str!("../../presets/smolvlm-256m.txt"),
    include_str!("../../presets/smolvlm-500m.txt"),
    include_str!("../../presets/smolvlm-2.2b.txt"),
];

const KEYS: [&str; 15] = [
    "name",
    "encoder_params",
    "lm_params",
    "lm_layers",
    "kv_heads",
    "head_dim",
    "hidden",
    "tile_size",
    "patch",
    "shuffle_r",
    "longest_edge_cap",
    "context_limit",
    "frames_per_video",
    "tokens_per_frame",
    "bytes_per_param",
];

/// Full-scale pipeline geometry and model sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub name: String,
    pub encoder_params: u64,
    pub lm_params: u64,
    pub lm_layers: u64,
    /// Key/value heads per layer (grouped-query attention shares them).
    pub kv_heads: u64,
    pub head_dim: u64,
    pub hidden: u64,
    pub tile_size: usize,
    pub patch: usize,
    pub shuffle_r: usize,
    pub longest_edge_cap: usize,
    pub context_limit: usize,
    pub frames_per_video: usize,
    /// Defaults to one sub-image's post-shuffle token count.
    pub tokens_per_frame: Option<usize>,
    pub bytes_per_param: u64,
}

impl PipelineConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let i = PRESET_NAMES
            .iter()
            .position(|&n| n == name)
            .ok_or_else(|| BudgetError::UnknownPreset(name.to_string()))?;
        Self::parse(PRESETS[i])
    }

    pub fn presets() -> Vec<Self> {
        PRESETS
            .iter()
            .map(|p| Self::parse(p).expect("bundled preset"))
            .collect()
    }

    /// Bundled preset text, for writing out as an editable file.
    pub fn preset_text(name: &str) -> Option<&'static str> {
        PRESET_NAMES.iter().position(|&n| n == name).map(|i| PRESETS[i])
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&KvMap::parse(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvMap::load(path)?)
    }

    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        kv.deny_unknown(&KEYS)?;
        let cfg = Self {
            name: kv.require("name")?,
            encoder_params: kv.require("encoder_params")?,
            lm_params: kv.require("lm_params")?,
            lm_layers: kv.require("lm_layers")?,
            kv_heads: kv.require("kv_heads")?,
            head_dim: kv.require("head_dim")?,
            hidden: kv.require("hidden")?,
            tile_size: kv.require("tile_size")?,
            patch: kv.require("patch")?,
            shuffle_r: kv.require("shuffle_r")?,
            longest_edge_cap: kv.require("longest_edge_cap")?,
            context_limit: kv.require("context_limit")?,
            frames_per_video: kv.get_or("frames_per_video", 64)?,
            tokens_per_frame: kv.get("tokens_per_frame")?,
            bytes_per_param: kv.get_or("bytes_per_param", 2)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.insert("name", &self.name);
        kv.insert("encoder_params", self.encoder_params);
        kv.insert("lm_params", self.lm_params);
        kv.insert("lm_layers", self.lm_layers);
        kv.insert("kv_heads", self.kv_heads);
        kv.insert("head_dim", self.head_dim);
        kv.insert("hidden", self.hidden);
        kv.insert("tile_size", self.tile_size);
        kv.insert("patch", self.patch);
        kv.insert("shuffle_r", self.shuffle_r);
        kv.insert("longest_edge_cap", self.longest_edge_cap);
        kv.insert("context_limit", self.context_limit);
        kv.insert("frames_per_video", self.frames_per_video);
        if let Some(t) = self.tokens_per_frame {
            kv.insert("tokens_per_frame", t);
        }
        kv.insert("bytes_per_param", self.bytes_per_param);
        kv
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("encoder_params", self.encoder_params),
            ("lm_params", self.lm_params),
            ("lm_layers", self.lm_layers),
            ("kv_heads", self.kv_heads),
            ("head_dim", self.head_dim),
            ("hidden", self.hidden),
            ("bytes_per_param", self.bytes_per_param),
        ];
        let sizes = [
            ("tile_size", self.tile_size),
            ("patch", self.patch),
            ("shuffle_r", self.shuffle_r),
            ("longest_edge_cap", self.longest_edge_cap),
            ("context_limit", self.context_limit),
            ("frames_per_video", self.frames_per_video),
            ("tokens_per_frame", self.tokens_per_frame.unwrap_or(1)),
        ];
        let zero = counts
            .iter()
            .find(|(_, v)| *v == 0)
            .map(|(k, _)| *k)
            .or_else(|| sizes.iter().find(|(_, v)| *v == 0).map(|(k, _)| *k));
        if let Some(key) = zero {
            return Err(BudgetError::Config(format!("{key} must be positive")));
        }
        if !self.tile_size.is_multiple_of(self.patch) {
            return Err(BudgetError::Config(format!(
                "tile_size {} is not a multiple of patch {}",
                self.tile_size, self.patch
            )));
        }
        if !(self.tile_size / self.patch).is_multiple_of(self.shuffle_r) {
            return Err(BudgetError::Config(format!(
                "{} patches per side are not divisible by shuffle_r {}",
                self.tile_size / self.patch,
                self.shuffle_r
            )));
        }
        Ok(())
    }

    pub fn total_params(&self) -> u64 {
        self.encoder_params + self.lm_params
    }

    /// Visual tokens per sub-image after pixel shuffle.
    pub fn tokens_per_tile(&self) -> usize {
        (self.tile_size / self.patch / self.shuffle_r).pow(2)
    }

    pub fn frame_tokens(&self) -> usize {
        self.tokens_per_frame.unwrap_or_else(|| self.tokens_per_tile())
    }
}

/// Per-sample inputs for a budget comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub image_width: usize,
    pub image_height: usize,
    pub images: usize,
    pub videos: usize,
    /// Frames per video; `None` uses each config's own default.
    pub video_frames: Option<usize>,
    pub text_tokens: usize,
    pub batch: u64,
    pub bytes_per_scalar: u64,
}

impl Default for Workload {
    fn default() -> Self {
        Self {
            image_width: 1920,
            image_height: 1080,
            images: 1,
            videos: 0,
            video_frames: None,
            text_tokens: 256,
            batch: 1,
            bytes_per_scalar: 2,
        }
    }
}

impl Workload {
    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        kv.deny_unknown(&[
            "image_width",
            "image_height",
            "images",
            "videos",
            "video_frames",
            "text_tokens",
            "batch",
            "bytes_per_scalar",
        ])?;
        let d = Self::default();
        let w = Self {
            image_width: kv.get_or("image_width", d.image_width)?,
            image_height: kv.get_or("image_height", d.image_height)?,
            images: kv.get_or("images", d.images)?,
            videos: kv.get_or("videos", d.videos)?,
            video_frames: kv.get("video_frames")?,
            text_tokens: kv.get_or("text_tokens", d.text_tokens)?,
            batch: kv.get_or("batch", d.batch)?,
            bytes_per_scalar: kv.get_or("bytes_per_scalar", d.bytes_per_scalar)?,
        };
        if w.image_width == 0 || w.image_height == 0 || w.batch == 0 || w.bytes_per_scalar == 0 {
            return Err(BudgetError::Config(
                "workload image size, batch and bytes_per_scalar must be positive".into(),
            ));
        }
        Ok(w)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&KvMap::parse(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvMap::load(path)?)
    }

    pub fn with_batch(&self, batch: u64) -> Self {
        Self { batch, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_round_trip() {
        let all = PipelineConfig::presets();
        assert_eq!(all.len(), 3);
        for (cfg, name) in all.iter().zip(PRESET_NAMES) {
            assert_eq!(cfg.name, name);
            assert_eq!(cfg.tokens_per_tile(), 64);
            let back = PipelineConfig::parse(&cfg.to_kv().to_string()).unwrap();
            assert_eq!(&back, cfg);
        }
        assert!(PipelineConfig::preset("smolvlm-9b").is_err());
    }

    #[test]
    fn bad_configs_report_lines() {
        let text = PipelineConfig::preset_text("smolvlm-256m").unwrap();
        let err = PipelineConfig::parse(&text.replace("patch = 16", "patch = sixteen")).unwrap_err();
        match err {
            BudgetError::Kv(e) => assert_eq!(e.line(), Some(10)),
            other => panic!("{other}"),
        }
        assert!(PipelineConfig::parse(&text.replace("shuffle_r = 4", "shuffle_r = 3")).is_err());
        assert!(PipelineConfig::parse(&text.replace("kv_heads = 3", "kv_heads = 0")).is_err());
    }

    #[test]
    fn workload_defaults() {
        let w = Workload::parse("batch = 4\n").unwrap();
        assert_eq!(w.batch, 4);
        assert_eq!(w.images, 1);
        assert!(Workload::parse("batch = 0\n").is_err());
        assert!(Workload::parse("nonsense = 1\n").is_err());
    }
}
