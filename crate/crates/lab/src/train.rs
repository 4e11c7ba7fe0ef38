//! Training loop with early stopping and exact-match evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use smolpipe_core::model::{train_step, Adam, AdamConfig, LogRow, LrSchedule, ToyVlm, TrainExample, TrainLog};

use crate::pipeline::Pipeline;
use crate::tasks::Sample;
use crate::{LabError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub steps: usize,
    pub schedule: LrSchedule,
    /// Stop as soon as a step's loss falls below this.
    pub target_loss: Option<f64>,
    /// `None` trains on the whole set every step.
    pub batch_size: Option<usize>,
    /// Orders minibatches.
    pub seed: u64,
    pub adam: AdamConfig,
}

impl FitConfig {
    /// Full-batch warmup plus cosine decay over `steps`.
    pub fn new(steps: usize, peak_lr: f64) -> Self {
        Self {
            steps,
            schedule: LrSchedule {
                peak: peak_lr,
                warmup: (steps / 20).min(50),
                total: steps,
                floor: 0.1,
            },
            target_loss: None,
            batch_size: None,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }

    pub fn with_target(mut self, loss: f64) -> Self {
        self.target_loss = Some(loss);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub log: TrainLog,
    /// Updates actually applied.
    pub steps: usize,
    /// Loss of the last step run, before its update.
    pub final_loss: f64,
    pub reached_target: bool,
}

/// Runs up to `cfg.steps` Adam updates; `observe` sees every log row.
pub fn fit(
    model: &mut ToyVlm,
    examples: &[TrainExample],
    cfg: &FitConfig,
    mut observe: impl FnMut(&LogRow),
) -> Result<FitReport> {
    if examples.is_empty() {
        return Err(LabError::Invalid("no training examples".into()));
    }
    let mut opt = Adam::new(cfg.adam);
    let mut log = TrainLog::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let batch = cfg.batch_size.unwrap_or(examples.len()).clamp(1, examples.len());
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut cursor = examples.len();
    let mut report = FitReport {
        log: TrainLog::default(),
        steps: 0,
        final_loss: f64::NAN,
        reached_target: false,
    };
    let mut picked = Vec::with_capacity(batch);
    for step in 0..cfg.steps {
        let stats = if batch == examples.len() {
            train_step(model, &mut opt, examples, cfg.schedule.at(step))?
        } else {
            picked.clear();
            while picked.len() < batch {
                if cursor == order.len() {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                picked.push(examples[order[cursor]].clone());
                cursor += 1;
            }
            train_step(model, &mut opt, &picked, cfg.schedule.at(step))?
        };
        log.record(step, &stats, cfg.schedule.at(step));
        observe(log.rows.last().expect("just recorded"));
        report.steps = step + 1;
        report.final_loss = stats.loss;
        if cfg.target_loss.is_some_and(|t| stats.loss < t) {
            report.reached_target = true;
            break;
        }
    }
    report.log = log;
    Ok(report)
}

/// Greedy answers and how many match exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub outputs: Vec<String>,
    pub correct: usize,
}

impl Evaluation {
    pub fn total(&self) -> usize {
        self.outputs.len()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total().max(1) as f64
    }
}

/// Decodes every sample's answer greedily and compares it to the reference.
pub fn evaluate(model: &ToyVlm, pipeline: &Pipeline, samples: &[Sample], max_new: usize) -> Result<Evaluation> {
    let stop = pipeline.stop_token()?;
    let outputs = samples
        .par_iter()
        .map(|s| {
            let (prefix, media) = pipeline.prompt(s)?;
            let generated = model.generate(&prefix, &media, max_new, stop)?;
            Ok(pipeline.vocab.decode(&generated.ids)?)
        })
        .collect::<Result<Vec<String>>>()?;
    let correct = outputs.iter().zip(samples).filter(|(o, s)| **o == s.answer).count();
    Ok(Evaluation { outputs, correct })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::TaskKind;

    fn small() -> (Pipeline, Vec<Sample>) {
        let set = TaskKind::Caption.generate(4, 0);
        (Pipeline::for_tasks([&set], 1).unwrap(), set.samples)
    }

    #[test]
    fn zero_steps_leave_model_alone() {
        let (p, samples) = small();
        let mut model = ToyVlm::init(p.model.clone(), 1).unwrap();
        let before = model.clone();
        let ex = p.train_examples(&samples).unwrap();
        let r = fit(&mut model, &ex, &FitConfig::new(0, 1e-3), |_| {}).unwrap();
        assert_eq!(r.steps, 0);
        assert_eq!(model.params(), before.params());
    }

    #[test]
    fn loss_falls_and_runs_repeat() {
        let (p, samples) = small();
        let ex = p.train_examples(&samples).unwrap();
        let run = || {
            let mut model = ToyVlm::init(p.model.clone(), 7).unwrap();
            let cfg = FitConfig {
                batch_size: Some(2),
                ..FitConfig::new(30, 3e-3)
            };
            fit(&mut model, &ex, &cfg, |_| {}).unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        let first = a.log.rows[0].loss;
        assert!(a.final_loss < first, "{first} -> {}", a.final_loss);
    }

    #[test]
    fn evaluation_counts_matches() {
        let (p, samples) = small();
        let model = ToyVlm::init(p.model.clone(), 1).unwrap();
        let e = evaluate(&model, &p, &samples, 4).unwrap();
        assert_eq!(e.total(), 4);
        assert!(e.correct <= 4);
        assert!(evaluate(&model, &p, &samples, 0)
            .unwrap()
            .outputs
            .iter()
            .all(String::is_empty));
    }
}
