//! On-disk task sets: `manifest.txt`, `samples.jsonl` and a `media/` tree of
//! PPM images and frame directories.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Component, Path};

use serde::{Deserialize, Serialize};
use smolpipe_core::kv::KvMap;
use smolpipe_core::vision::{FrameSource, RawImage};

use crate::tasks::{Sample, SampleMedia, TaskKind, TaskSet};
use crate::{LabError, Result};

/// How a set was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetManifest {
    pub task: TaskKind,
    pub count: usize,
    pub seed: u64,
}

impl DatasetManifest {
    pub fn generate(&self) -> TaskSet {
        self.task.generate(self.count, self.seed)
    }

    fn to_kv(self) -> KvMap {
        let mut kv = KvMap::new();
        kv.insert("task", self.task);
        kv.insert("count", self.count);
        kv.insert("seed", self.seed);
        kv
    }

    fn from_kv(kv: &KvMap) -> Result<Self> {
        kv.deny_unknown(&["task", "count", "seed"])?;
        Ok(Self {
            task: kv.require::<String>("task")?.parse()?,
            count: kv.require("count")?,
            seed: kv.require("seed")?,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MediaPath {
    Image(String),
    Video(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    prompt: String,
    answer: String,
    media: MediaPath,
}

fn invalid(path: &Path, message: impl Into<String>) -> LabError {
    LabError::Dataset {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Writes `set` under `dir`, creating it if needed.
pub fn save_dataset(dir: impl AsRef<Path>, manifest: &DatasetManifest, set: &TaskSet) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir.join("media"))?;
    manifest.to_kv().save(dir.join("manifest.txt"))?;
    let mut out = BufWriter::new(File::create(dir.join("samples.jsonl"))?);
    for s in &set.samples {
        let media = match &s.media {
            SampleMedia::Image(img) => {
                let rel = format!("media/{}.ppm", s.id);
                img.save_ppm(dir.join(&rel))?;
                MediaPath::Image(rel)
            }
            SampleMedia::Video(frames) => {
                let rel = format!("media/{}", s.id);
                FrameSource::new(frames.clone(), frames.len() as f64)?.save_dir(dir.join(&rel))?;
                MediaPath::Video(rel)
            }
        };
        let record = Record {
            id: s.id.clone(),
            prompt: s.prompt.clone(),
            answer: s.answer.clone(),
            media,
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn media_path(dir: &Path, rel: &str) -> Result<std::path::PathBuf> {
    let p = Path::new(rel);
    if p.components().any(|c| !matches!(c, Component::Normal(_))) {
        return Err(invalid(
            dir,
            format!("media path {rel:?} must be relative and stay inside the dataset"),
        ));
    }
    Ok(dir.join(p))
}

/// Reads a dataset written by [`save_dataset`] and checks it against its manifest.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<(DatasetManifest, TaskSet)> {
    let dir = dir.as_ref();
    let manifest = DatasetManifest::from_kv(&KvMap::load(dir.join("manifest.txt"))?)?;
    let samples_path = dir.join("samples.jsonl");
    let reader = BufReader::new(File::open(&samples_path).map_err(|e| invalid(&samples_path, e.to_string()))?);
    let mut samples = Vec::new();
    let mut ids = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record =
            serde_json::from_str(&line).map_err(|e| invalid(&samples_path, format!("line {}: {e}", n + 1)))?;
        if !ids.insert(record.id.clone()) {
            return Err(invalid(
                &samples_path,
                format!("line {}: repeated id {}", n + 1, record.id),
            ));
        }
        let media = match &record.media {
            MediaPath::Image(rel) => SampleMedia::Image(RawImage::load_ppm(media_path(dir, rel)?)?),
            MediaPath::Video(rel) => SampleMedia::Video(FrameSource::load_dir(media_path(dir, rel)?)?.frames),
        };
        samples.push(Sample {
            id: record.id,
            prompt: record.prompt,
            answer: record.answer,
            media,
        });
    }
    if samples.len() != manifest.count {
        return Err(invalid(
            &samples_path,
            format!("{} samples but the manifest lists {}", samples.len(), manifest.count),
        ));
    }
    Ok((
        manifest,
        TaskSet {
            kind: manifest.task,
            samples,
        },
    ))
}
