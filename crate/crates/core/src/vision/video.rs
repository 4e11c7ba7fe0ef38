use std::path::Path;

use super::image::RawImage;
use super::{Result, VisionError};
use crate::kv::KvMap;

/// Decoded video stand-in: ordered frames spanning `duration` seconds.
#[derive(Debug, Clone)]
pub struct FrameSource {
    pub frames: Vec<RawImage>,
    pub duration: f64,
}

impl FrameSource {
    pub fn new(frames: Vec<RawImage>, duration: f64) -> Result<Self> {
        if frames.is_empty() {
            return Err(VisionError::EmptyVideo);
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(VisionError::InvalidArgument(format!("bad duration {duration}")));
        }
        Ok(Self { frames, duration })
    }

    /// Start time of frame `index`, assuming a constant frame rate.
    pub fn timestamp(&self, index: usize) -> f64 {
        index as f64 * self.duration / self.frames.len() as f64
    }

    /// Loads a directory of numbered `.ppm` frames plus `manifest.txt`.
    ///
    /// The manifest is flat `key = value` text with `frame_rate` and/or
    /// `duration` (seconds); a missing duration is derived from the rate.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest = KvMap::load(dir.join("manifest.txt"))?;
        let mut numbered = Vec::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("ppm") {
                continue;
            }
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            let digits: String = stem.chars().filter(|c| c.is_ascii_digit()).collect();
            let Ok(n) = digits.parse::<u64>() else {
                return Err(VisionError::InvalidArgument(format!(
                    "frame file {} has no frame number",
                    path.display()
                )));
            };
            numbered.push((n, path));
        }
        numbered.sort();
        let frames = numbered
            .iter()
            .map(|(_, p)| RawImage::load_ppm(p))
            .collect::<Result<Vec<_>>>()?;
        let duration = match (manifest.get::<f64>("duration")?, manifest.get::<f64>("frame_rate")?) {
            (Some(d), _) => d,
            (None, Some(rate)) if rate > 0.0 => frames.len() as f64 / rate,
            _ => {
                return Err(VisionError::InvalidArgument(
                    "manifest needs duration or frame_rate".into(),
                ))
            }
        };
        Self::new(frames, duration)
    }

    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (i, f) in self.frames.iter().enumerate() {
            f.save_ppm(dir.join(format!("frame_{i:05}.ppm")))?;
        }
        let mut manifest = KvMap::new();
        manifest.insert("frame_rate", self.frames.len() as f64 / self.duration);
        manifest.insert("duration", self.duration);
        manifest.save(dir.join("manifest.txt"))?;
        Ok(())
    }
}

/// Encoder-resolution frames with their source timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    frames: Vec<RawImage>,
    timestamps: Vec<f64>,
    /// Set when fewer frames than requested were available.
    clamped: bool,
}

impl FrameSet {
    pub fn new(frames: Vec<RawImage>, timestamps: Vec<f64>) -> Result<Self> {
        if frames.is_empty() {
            return Err(VisionError::EmptyVideo);
        }
        if frames.len() != timestamps.len() {
            return Err(VisionError::InvalidArgument(format!(
                "{} frames but {} timestamps",
                frames.len(),
                timestamps.len()
            )));
        }
        if timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(VisionError::InvalidArgument("timestamps must strictly increase".into()));
        }
        Ok(Self {
            frames,
            timestamps,
            clamped: false,
        })
    }

    pub fn frames(&self) -> &[RawImage] {
        &self.frames
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn clamped(&self) -> bool {
        self.clamped
    }
}

/// Indices of `n` uniformly spaced frames out of `len`.
///
/// One sample takes the temporal midpoint; two or more include both endpoints.
pub fn sample_indices(len: usize, n: usize) -> Vec<usize> {
    match n.min(len) {
        0 => Vec::new(),
        1 => vec![len / 2],
        n => (0..n)
            .map(|i| (i as f64 * (len - 1) as f64 / (n - 1) as f64).round() as usize)
            .collect(),
    }
}

/// Samples `n` frames and rescales each to `tile_size²` (video frames are not tiled).
///
/// Asking for more frames than exist returns every frame with `clamped` set.
pub fn sample_frames(source: &FrameSource, n: usize, tile_size: usize) -> Result<FrameSet> {
    if n == 0 {
        return Err(VisionError::InvalidArgument("need at least one frame".into()));
    }
    if tile_size == 0 {
        return Err(VisionError::InvalidArgument("tile size must be at least 1".into()));
    }
    let indices = sample_indices(source.frames.len(), n);
    let frames = indices
        .iter()
        .map(|&i| source.frames[i].resize(tile_size, tile_size))
        .collect::<Result<Vec<_>>>()?;
    let timestamps = indices.iter().map(|&i| source.timestamp(i)).collect();
    let mut set = FrameSet::new(frames, timestamps)?;
    set.clamped = n > source.frames.len();
    Ok(set)
}

/// Replaces each run of `k` consecutive frames by its per-pixel mean.
pub fn average_frames(fs: &FrameSet, k: usize) -> Result<FrameSet> {
    if ![1, 2, 4, 8].contains(&k) {
        return Err(VisionError::InvalidArgument(format!(
            "averaging factor {k} not in {{1,2,4,8}}"
        )));
    }
    if !fs.len().is_multiple_of(k) {
        return Err(VisionError::NotDivisible {
            what: "frame count",
            value: fs.len(),
            by: k,
        });
    }
    if k == 1 {
        return Ok(fs.clone());
    }
    let mut frames = Vec::with_capacity(fs.len() / k);
    let mut timestamps = Vec::with_capacity(fs.len() / k);
    for (group, times) in fs.frames.chunks(k).zip(fs.timestamps.chunks(k)) {
        let first = &group[0];
        if group
            .iter()
            .any(|f| f.width() != first.width() || f.height() != first.height())
        {
            return Err(VisionError::InvalidArgument("frames differ in size".into()));
        }
        let data = (0..first.data().len())
            .map(|i| {
                let sum: usize = group.iter().map(|f| f.data()[i] as usize).sum();
                ((sum + k / 2) / k) as u8
            })
            .collect();
        frames.push(RawImage::new(first.width(), first.height(), data)?);
        timestamps.push(times[0]);
    }
    let mut out = FrameSet::new(frames, timestamps)?;
    out.clamped = fs.clamped;
    Ok(out)
}
