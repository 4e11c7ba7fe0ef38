//! One-axis sweeps: train a fresh toy model per setting and score it on a
//! held-out split of the matching synthetic task.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use smolpipe_core::model::ToyVlm;

use crate::pipeline::Pipeline;
use crate::tasks::{TaskKind, TaskSet};
use crate::train::{evaluate, fit, FitConfig};
use crate::{LabError, Result};

/// Base used before the fine-tune phase of the extended RoPE setting.
pub const ROPE_BASE: f64 = 10_000.0;
pub const ROPE_BASE_EXTENDED: f64 = 273_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// Pixel-shuffle factor on the caption task.
    Shuffle,
    /// Frame-averaging factor on the temporal-order task.
    Frames,
    /// Learned vs spelled-out tile positions on the OCR-grid task.
    PosMode,
    /// RoPE base on the caption task, including a switch mid-training.
    RopeBase,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::Shuffle, Axis::Frames, Axis::PosMode, Axis::RopeBase];

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Shuffle => "shuffle",
            Axis::Frames => "frames",
            Axis::PosMode => "posmode",
            Axis::RopeBase => "ropebase",
        }
    }

    pub fn task(self) -> TaskKind {
        match self {
            Axis::Shuffle | Axis::RopeBase => TaskKind::Caption,
            Axis::Frames => TaskKind::TemporalOrder,
            Axis::PosMode => TaskKind::OcrGrid,
        }
    }

    /// Setting labels in sweep order.
    pub fn settings(self) -> Vec<String> {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
        match self {
            Axis::Shuffle => s(&["1", "2", "4"]),
            Axis::Frames => s(&["1", "2", "4", "8"]),
            Axis::PosMode => s(&["learned", "string"]),
            Axis::RopeBase => s(&["10000", "273000", "10000->273000"]),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|a| a.as_str() == s).ok_or_else(|| {
            LabError::Invalid(format!(
                "unknown axis {s:?}; expected shuffle, frames, posmode or ropebase"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationConfig {
    pub steps: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub train_count: usize,
    pub eval_count: usize,
    /// Seeds the training split, the model init and minibatch order; the
    /// held-out split uses `seed + 1`.
    pub seed: u64,
    pub target_loss: f64,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            steps: 200,
            lr: 3e-3,
            batch_size: 16,
            train_count: 48,
            eval_count: 32,
            seed: 1,
            target_loss: 0.01,
        }
    }
}

/// Outcome of one setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub axis: String,
    pub setting: String,
    /// Exact-match accuracy on the held-out split.
    pub accuracy: f64,
    pub train_accuracy: f64,
    pub mean_seq_len: f64,
    pub visual_tokens: usize,
    pub final_loss: f64,
    pub steps: usize,
    pub params: usize,
}

/// Runs every setting of `axis` in order.
pub fn run_ablation(axis: Axis, cfg: &AblationConfig) -> Result<Vec<AblationRow>> {
    let (train, held_out) = splits(axis, cfg);
    axis.settings()
        .iter()
        .map(|s| run_setting_on(axis, s, cfg, &train, &held_out))
        .collect()
}

/// Runs a single setting label from [`Axis::settings`].
pub fn run_setting(axis: Axis, setting: &str, cfg: &AblationConfig) -> Result<AblationRow> {
    let (train, held_out) = splits(axis, cfg);
    run_setting_on(axis, setting, cfg, &train, &held_out)
}

fn splits(axis: Axis, cfg: &AblationConfig) -> (TaskSet, TaskSet) {
    let task = axis.task();
    (
        task.generate(cfg.train_count, cfg.seed),
        task.generate(cfg.eval_count, cfg.seed + 1),
    )
}

fn bad_setting(axis: Axis, setting: &str) -> LabError {
    LabError::Invalid(format!("{setting:?} is not a {axis} setting"))
}

fn run_setting_on(
    axis: Axis,
    setting: &str,
    cfg: &AblationConfig,
    train: &TaskSet,
    held_out: &TaskSet,
) -> Result<AblationRow> {
    let grid = if axis == Axis::PosMode { 2 } else { 1 };
    let base = Pipeline::for_tasks([train, held_out], grid)?;
    let mut fine_tune = None;
    let pipeline = match axis {
        Axis::Shuffle => base.with_shuffle(setting.parse().map_err(|_| bad_setting(axis, setting))?),
        Axis::Frames => base.with_average(setting.parse().map_err(|_| bad_setting(axis, setting))?),
        Axis::PosMode => base.with_mode(setting.parse().map_err(|_| bad_setting(axis, setting))?),
        Axis::RopeBase => match setting {
            "10000" => base.with_rope_base(ROPE_BASE),
            "273000" => base.with_rope_base(ROPE_BASE_EXTENDED),
            "10000->273000" => {
                fine_tune = Some(ROPE_BASE_EXTENDED);
                base.with_rope_base(ROPE_BASE)
            }
            _ => return Err(bad_setting(axis, setting)),
        },
    };
    pipeline.model.validate()?;
    if !axis.settings().iter().any(|s| s == setting) {
        return Err(bad_setting(axis, setting));
    }

    let examples = pipeline.train_examples(&train.samples)?;
    let mut model = ToyVlm::init(pipeline.model.clone(), cfg.seed)?;
    let phases: Vec<(usize, Option<f64>)> = match fine_tune {
        None => vec![(cfg.steps, None)],
        Some(b) => vec![(cfg.steps - cfg.steps / 4, None), (cfg.steps / 4, Some(b))],
    };
    let (mut steps, mut final_loss) = (0, f64::NAN);
    let mut eval_pipeline = pipeline.clone();
    for (n, rebase) in phases {
        if let Some(b) = rebase {
            model.set_rope_base(b)?;
            eval_pipeline = eval_pipeline.with_rope_base(b);
        }
        let fc = FitConfig {
            batch_size: Some(cfg.batch_size),
            seed: cfg.seed,
            ..FitConfig::new(n, cfg.lr).with_target(cfg.target_loss)
        };
        let report = fit(&mut model, &examples, &fc, |_| {})?;
        steps += report.steps;
        final_loss = report.final_loss;
    }
    let max_new = held_out
        .samples
        .iter()
        .map(|s| eval_pipeline.vocab.encode(&s.answer).len())
        .max()
        .unwrap_or(0)
        + 2;
    let acc = evaluate(&model, &eval_pipeline, &held_out.samples, max_new)?;
    let train_acc = evaluate(&model, &eval_pipeline, &train.samples, max_new)?;
    let mean_seq_len = examples.iter().map(|e| e.ids.len()).sum::<usize>() as f64 / examples.len() as f64;
    Ok(AblationRow {
        axis: axis.to_string(),
        setting: setting.to_string(),
        accuracy: acc.accuracy(),
        train_accuracy: train_acc.accuracy(),
        mean_seq_len,
        visual_tokens: examples[0].placeholders.len(),
        final_loss,
        steps,
        params: model.num_params(),
    })
}

pub fn write_ablation_csv<W: Write>(out: W, rows: &[AblationRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> AblationConfig {
        AblationConfig {
            steps: 2,
            train_count: 4,
            eval_count: 2,
            ..AblationConfig::default()
        }
    }

    #[test]
    fn axes_parse_and_enumerate() {
        for a in Axis::ALL {
            assert_eq!(a.as_str().parse::<Axis>().unwrap(), a);
        }
        assert!("colour".parse::<Axis>().is_err());
        assert_eq!(Axis::Shuffle.settings(), ["1", "2", "4"]);
    }

    #[test]
    fn shuffle_rows_track_visual_tokens() {
        let rows = run_ablation(Axis::Shuffle, &tiny()).unwrap();
        let tokens: Vec<usize> = rows.iter().map(|r| r.visual_tokens).collect();
        assert_eq!(tokens, [16, 4, 1]);
        let mut buf = Vec::new();
        write_ablation_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("axis,setting,accuracy"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn rope_switch_and_bad_settings() {
        let row = run_setting(Axis::RopeBase, "10000->273000", &AblationConfig { steps: 4, ..tiny() }).unwrap();
        assert_eq!(row.steps, 4);
        assert!(run_setting(Axis::Frames, "3", &tiny()).is_err());
        assert!(run_setting(Axis::PosMode, "spelled", &tiny()).is_err());
    }
}
