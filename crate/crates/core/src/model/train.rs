use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use super::{media_patches, Media, ModelConfig, ModelError, Result, ToyVlm};
use crate::prompt::MultimodalSequence;
use crate::tensor::{ops, Tape, Tensor};

/// One rendered conversation with its media already cut into patches.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub ids: Vec<usize>,
    pub loss_mask: Vec<bool>,
    pub placeholders: Vec<usize>,
    pub patches: Vec<Tensor>,
}

impl TrainExample {
    pub fn from_sequence(seq: &MultimodalSequence, media: &[Media], cfg: &ModelConfig) -> Result<Self> {
        if seq.len() > cfg.context_limit {
            return Err(ModelError::ContextOverflow {
                len: seq.len(),
                limit: cfg.context_limit,
            });
        }
        Ok(Self {
            ids: seq.ids(),
            loss_mask: seq.loss_mask(),
            placeholders: seq.placeholder_positions(),
            patches: media_patches(media, &seq.media_refs(), cfg)?,
        })
    }

    /// Tokens the model reads: all but the last.
    pub fn input_len(&self) -> usize {
        self.ids.len().saturating_sub(1)
    }

    /// Inputs, next-token targets and their mask.
    fn shifted(&self) -> Result<(&[usize], &[usize], &[bool])> {
        let t = self.input_len();
        if t == 0 || self.loss_mask.len() != self.ids.len() {
            return Err(ModelError::InvalidArgument(
                "example needs at least two tokens and one mask entry per token".into(),
            ));
        }
        if self.placeholders.iter().any(|&p| p >= t) {
            return Err(ModelError::InvalidArgument("placeholder in the final position".into()));
        }
        Ok((&self.ids[..t], &self.ids[1..], &self.loss_mask[1..]))
    }
}

/// Masked next-token loss of one example and the gradient of every parameter.
pub fn loss_and_grads(model: &ToyVlm, ex: &TrainExample) -> Result<(f64, BTreeMap<String, Tensor>)> {
    let (inputs, targets, mask) = ex.shifted()?;
    let mut tape = Tape::new();
    let b = model.bind(&mut tape, true);
    let visual = model.visual_tokens_on(&mut tape, &b, &ex.patches)?;
    let logits = model.logits_on(&mut tape, &b, inputs, &ex.placeholders, visual)?;
    let loss = tape.cross_entropy_masked(logits, targets, mask)?;
    let value = tape.value(loss)?.data()[0];
    let mut grads = tape.backward(loss)?;
    let named = b
        .iter()
        .map(|(name, var)| {
            let g = grads.take(var).expect("every bound parameter is trainable");
            (name.to_string(), g)
        })
        .collect();
    Ok((value, named))
}

pub fn example_loss(model: &ToyVlm, ex: &TrainExample) -> Result<f64> {
    let (inputs, targets, mask) = ex.shifted()?;
    let logits = model.forward_ids(inputs, &ex.placeholders, &ex.patches)?;
    Ok(ops::cross_entropy_masked(&logits, targets, mask)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm ceiling applied before the update.
    pub clip_norm: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.95,
            eps: 1e-8,
            clip_norm: Some(1.0),
        }
    }
}

/// Bias-corrected Adam moments, one pair per parameter.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    step: u64,
    m: BTreeMap<String, Vec<f64>>,
    v: BTreeMap<String, Vec<f64>>,
}

impl Adam {
    pub fn new(cfg: AdamConfig) -> Self {
        Self {
            cfg,
            step: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, model: &mut ToyVlm, grads: &BTreeMap<String, Tensor>, lr: f64) -> Result<()> {
        self.step += 1;
        let AdamConfig { beta1, beta2, eps, .. } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (name, p) in model.params.iter_mut() {
            let g = grads.get(name).ok_or_else(|| ModelError::MissingParam(name.clone()))?;
            let n = p.numel();
            let m = self.m.entry(name.clone()).or_insert_with(|| vec![0.0; n]);
            let v = self.v.entry(name.clone()).or_insert_with(|| vec![0.0; n]);
            for (((w, &g), m), v) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                *w -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub loss: f64,
    pub grad_norm: f64,
    pub tokens: usize,
}

/// Mean loss over `batch`, one Adam update at rate `lr`.
///
/// Examples run in parallel; their gradients are summed in batch order so the
/// result does not depend on the thread count.
pub fn train_step(model: &mut ToyVlm, opt: &mut Adam, batch: &[TrainExample], lr: f64) -> Result<StepStats> {
    if batch.is_empty() {
        return Err(ModelError::InvalidArgument("empty batch".into()));
    }
    let frozen: &ToyVlm = model;
    let per_example: Vec<_> = batch.par_iter().map(|ex| loss_and_grads(frozen, ex)).collect();
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut sum: BTreeMap<String, Tensor> = BTreeMap::new();
    for result in per_example {
        let (l, grads) = result?;
        loss += l * scale;
        for (name, g) in grads {
            match sum.get_mut(&name) {
                Some(acc) => {
                    for (a, x) in acc.data_mut().iter_mut().zip(g.data()) {
                        *a += x * scale;
                    }
                }
                None => {
                    let scaled = g.data().iter().map(|x| x * scale).collect();
                    sum.insert(name, Tensor::new(g.shape().to_vec(), scaled)?);
                }
            }
        }
    }
    let grad_norm = sum
        .values()
        .flat_map(|g| g.data().iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    if let Some(limit) = opt.cfg.clip_norm {
        if grad_norm > limit {
            let k = limit / grad_norm;
            for g in sum.values_mut() {
                g.data_mut().iter_mut().for_each(|x| *x *= k);
            }
        }
    }
    opt.update(model, &sum, lr)?;
    Ok(StepStats {
        loss,
        grad_norm,
        tokens: batch.iter().map(TrainExample::input_len).sum(),
    })
}

/// Linear warmup to `peak`, then cosine decay to `peak · floor` at `total`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub peak: f64,
    pub warmup: usize,
    pub total: usize,
    pub floor: f64,
}

impl LrSchedule {
    pub fn constant(lr: f64) -> Self {
        Self {
            peak: lr,
            warmup: 0,
            total: 0,
            floor: 1.0,
        }
    }

    pub fn at(&self, step: usize) -> f64 {
        if step < self.warmup {
            return self.peak * (step + 1) as f64 / self.warmup as f64;
        }
        if self.total <= self.warmup {
            return self.peak;
        }
        let progress = ((step - self.warmup) as f64 / (self.total - self.warmup) as f64).min(1.0);
        let cosine = 0.5 * (1.0 + (std::f64::consts::PI * progress).cos());
        self.peak * (self.floor + (1.0 - self.floor) * cosine)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub loss: f64,
    pub lr: f64,
    /// Cumulative input tokens seen.
    pub tokens: usize,
}

/// Per-step training record, saved as CSV `step,loss,lr,tokens`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn record(&mut self, step: usize, stats: &StepStats, lr: f64) {
        let tokens = self.rows.last().map_or(0, |r| r.tokens) + stats.tokens;
        self.rows.push(LogRow {
            step,
            loss: stats.loss,
            lr,
            tokens,
        });
    }

    pub fn last_loss(&self) -> Option<f64> {
        self.rows.last().map(|r| r.loss)
    }

    pub fn write_csv(&self, w: impl std::io::Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["step", "loss", "lr", "tokens"])?;
        for r in &self.rows {
            out.write_record([
                r.step.to_string(),
                r.loss.to_string(),
                r.lr.to_string(),
                r.tokens.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv(r: impl std::io::Read) -> Result<Self> {
        let mut rows = Vec::new();
        for rec in csv::Reader::from_reader(r).records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or_default().to_string();
            let bad = |i: usize| ModelError::InvalidArgument(format!("bad log field {:?}", field(i)));
            rows.push(LogRow {
                step: field(0).parse().map_err(|_| bad(0))?,
                loss: field(1).parse().map_err(|_| bad(1))?,
                lr: field(2).parse().map_err(|_| bad(2))?,
                tokens: field(3).parse().map_err(|_| bad(3))?,
            });
        }
        Ok(Self { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn micro() -> (ToyVlm, TrainExample) {
        let cfg = ModelConfig {
            d_vision: 8,
            vision_heads: 1,
            d_model: 8,
            n_layers_vision: 1,
            n_layers_lm: 1,
            n_heads: 2,
            head_dim: 4,
            vocab_size: 12,
            ffn_mult: 2,
            patch: 4,
            tile_size: 8,
            shuffle_r: 2,
            rope_base: 10_000.0,
            context_limit: 8192,
        };
        let model = ToyVlm::init(cfg, 1).unwrap();
        let ex = TrainExample {
            ids: vec![1, 2, 0, 3, 4, 5],
            loss_mask: vec![false, false, false, false, true, true],
            placeholders: vec![2],
            patches: vec![Tensor::from_fn([4, 48], |i| (i % 5) as f64 / 5.0).unwrap()],
        };
        (model, ex)
    }

    #[test]
    fn zero_lr_leaves_params_bitwise() {
        let (mut model, ex) = micro();
        let before = model.clone();
        let mut opt = Adam::new(AdamConfig::default());
        train_step(&mut model, &mut opt, &[ex], 0.0).unwrap();
        assert!(model.params.iter().all(|(k, t)| t.bitwise_eq(&before.params[k])));
    }

    #[test]
    fn steps_reduce_loss() {
        let (mut model, ex) = micro();
        let mut opt = Adam::new(AdamConfig::default());
        let start = example_loss(&model, &ex).unwrap();
        let batch = [ex.clone()];
        for _ in 0..30 {
            train_step(&mut model, &mut opt, &batch, 1e-2).unwrap();
        }
        assert!(example_loss(&model, &ex).unwrap() < start * 0.5);
    }

    #[test]
    fn loss_matches_tape_value() {
        let (model, ex) = micro();
        let (l, grads) = loss_and_grads(&model, &ex).unwrap();
        assert_eq!(l, example_loss(&model, &ex).unwrap());
        assert_eq!(grads.len(), model.params.len());
    }

    #[test]
    fn schedule_shape() {
        let s = LrSchedule {
            peak: 1.0,
            warmup: 4,
            total: 14,
            floor: 0.1,
        };
        assert_eq!(s.at(0), 0.25);
        assert_eq!(s.at(3), 1.0);
        assert!((s.at(14) - 0.1).abs() < 1e-12);
        assert!((1..20).all(|i| i <= 4 || s.at(i) <= s.at(i - 1)));
        assert_eq!(LrSchedule::constant(0.3).at(99), 0.3);
    }

    #[test]
    fn log_csv_round_trip() {
        let mut log = TrainLog::default();
        let st = StepStats {
            loss: 1.5,
            grad_norm: 0.0,
            tokens: 10,
        };
        log.record(0, &st, 1e-3);
        log.record(1, &st, 2e-3);
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("step,loss,lr,tokens\n"));
        let back = TrainLog::read_csv(&buf[..]).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.rows[1].tokens, 20);
    }
}
