use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{media_patches, Media, ModelConfig, ModelError, Result};
use crate::compress::{pixel_shuffle_on, ShuffleRatio, VisualFeatureMap};
use crate::prompt::MultimodalSequence;
use crate::tensor::{ops, Tape, Tensor, Var};

const INIT_STD: f64 = 0.02;
const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy)]
enum Init {
    Normal,
    Zeros,
    Ones,
}

type Spec = (String, Vec<usize>, Init);

fn block_specs(out: &mut Vec<Spec>, prefix: &str, d: usize, hidden: usize) {
    let mut push = |name: &str, shape: Vec<usize>, init| out.push((format!("{prefix}.{name}"), shape, init));
    push("ln1.g", vec![d], Init::Ones);
    push("ln1.b", vec![d], Init::Zeros);
    for w in ["attn.wq", "attn.wk", "attn.wv", "attn.wo"] {
        push(w, vec![d, d], Init::Normal);
    }
    push("ln2.g", vec![d], Init::Ones);
    push("ln2.b", vec![d], Init::Zeros);
    push("mlp.w1", vec![d, hidden], Init::Normal);
    push("mlp.b1", vec![hidden], Init::Zeros);
    push("mlp.w2", vec![hidden, d], Init::Normal);
    push("mlp.b2", vec![d], Init::Zeros);
}

/// Every parameter with its shape, in a fixed order.
fn param_specs(cfg: &ModelConfig) -> Vec<Spec> {
    let (dv, d) = (cfg.d_vision, cfg.d_model);
    let mut out: Vec<Spec> = vec![
        ("vision.patch.w".into(), vec![cfg.patch_dim(), dv], Init::Normal),
        ("vision.patch.b".into(), vec![dv], Init::Zeros),
        ("vision.pos".into(), vec![cfg.patches_per_tile(), dv], Init::Normal),
    ];
    for i in 0..cfg.n_layers_vision {
        block_specs(&mut out, &format!("vision.blocks.{i}"), dv, dv * cfg.ffn_mult);
    }
    out.push(("proj.w1".into(), vec![cfg.shuffled_channels(), d], Init::Normal));
    out.push(("proj.b1".into(), vec![d], Init::Zeros));
    out.push(("proj.w2".into(), vec![d, d], Init::Normal));
    out.push(("proj.b2".into(), vec![d], Init::Zeros));
    out.push(("lm.embed".into(), vec![cfg.vocab_size, d], Init::Normal));
    for i in 0..cfg.n_layers_lm {
        block_specs(&mut out, &format!("lm.blocks.{i}"), d, d * cfg.ffn_mult);
    }
    out.push(("lm.norm.g".into(), vec![d], Init::Ones));
    out.push(("lm.norm.b".into(), vec![d], Init::Zeros));
    out.push(("lm.head.w".into(), vec![d, cfg.vocab_size], Init::Normal));
    out
}

/// Parameter counts per tower.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TowerCounts {
    pub vision: usize,
    pub projector: usize,
    pub lm: usize,
}

impl TowerCounts {
    pub fn total(&self) -> usize {
        self.vision + self.projector + self.lm
    }
}

/// Parameters of one forward pass, recorded as tape leaves.
#[derive(Debug)]
pub struct Bound {
    vars: HashMap<String, Var>,
}

impl Bound {
    pub fn get(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::MissingParam(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Var)> {
        self.vars.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

/// Vision encoder, projector and decoder weights plus their configuration.
#[derive(Debug, Clone)]
pub struct ToyVlm {
    cfg: ModelConfig,
    pub(crate) params: BTreeMap<String, Tensor>,
}

impl ToyVlm {
    /// Weights drawn from `N(0, 0.02²)`, LayerNorm gains one, biases zero.
    pub fn init(cfg: ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_STD).expect("positive std");
        let mut params = BTreeMap::new();
        for (name, shape, init) in param_specs(&cfg) {
            let t = match init {
                Init::Normal => Tensor::from_fn(shape, |_| normal.sample(&mut rng))?,
                Init::Zeros => Tensor::zeros(shape)?,
                Init::Ones => Tensor::full(shape, 1.0)?,
            };
            params.insert(name, t);
        }
        Ok(Self { cfg, params })
    }

    /// Builds a model from named tensors, which must match the config exactly.
    pub fn from_params(cfg: ModelConfig, mut params: BTreeMap<String, Tensor>) -> Result<Self> {
        cfg.validate()?;
        let specs = param_specs(&cfg);
        let mut checked = BTreeMap::new();
        for (name, shape, _) in specs {
            let t = params
                .remove(&name)
                .ok_or_else(|| ModelError::MissingParam(name.clone()))?;
            if t.shape() != shape {
                return Err(ModelError::ParamShape {
                    name,
                    expected: shape,
                    got: t.shape().to_vec(),
                });
            }
            checked.insert(name, t.with_grad(false));
        }
        if let Some(extra) = params.keys().next() {
            return Err(ModelError::InvalidArgument(format!("unexpected parameter {extra}")));
        }
        Ok(Self { cfg, params: checked })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &BTreeMap<String, Tensor> {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<&Tensor> {
        self.params.get(name)
    }

    /// Replaces one parameter, keeping its shape.
    pub fn set_param(&mut self, name: &str, value: Tensor) -> Result<()> {
        let slot = self
            .params
            .get_mut(name)
            .ok_or_else(|| ModelError::MissingParam(name.to_string()))?;
        if slot.shape() != value.shape() {
            return Err(ModelError::ParamShape {
                name: name.to_string(),
                expected: slot.shape().to_vec(),
                got: value.shape().to_vec(),
            });
        }
        *slot = value.with_grad(false);
        Ok(())
    }

    /// Changes the RoPE base; no parameter depends on it.
    pub fn set_rope_base(&mut self, base: f64) -> Result<()> {
        let cfg = ModelConfig {
            rope_base: base,
            ..self.cfg.clone()
        };
        cfg.validate()?;
        self.cfg = cfg;
        Ok(())
    }

    pub fn num_params(&self) -> usize {
        self.params.values().map(Tensor::numel).sum()
    }

    pub fn tower_counts(&self) -> TowerCounts {
        let count = |prefix: &str| {
            self.params
                .iter()
                .filter(|(k, _)| k.starts_with(prefix))
                .map(|(_, t)| t.numel())
                .sum()
        };
        TowerCounts {
            vision: count("vision."),
            projector: count("proj."),
            lm: count("lm."),
        }
    }

    /// Writes `config.txt` and one tensor file per parameter under `params/`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir.join("params"))?;
        self.cfg.save(dir.join("config.txt"))?;
        for (name, t) in &self.params {
            t.save(dir.join("params").join(format!("{name}.smt")))?;
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let cfg = ModelConfig::load(dir.join("config.txt"))?;
        let mut params = BTreeMap::new();
        for (name, _, _) in param_specs(&cfg) {
            let t = Tensor::load(dir.join("params").join(format!("{name}.smt")))?;
            params.insert(name, t);
        }
        Self::from_params(cfg, params)
    }

    /// Records every parameter on `tape`; `trainable` decides whether they
    /// collect gradients.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Bound {
        let vars = self
            .params
            .iter()
            .map(|(k, t)| (k.clone(), tape.leaf(t.clone().with_grad(trainable))))
            .collect();
        Bound { vars }
    }

    fn linear(&self, tape: &mut Tape, b: &Bound, x: Var, w: &str, bias: Option<&str>) -> Result<Var> {
        let y = tape.matmul(x, b.get(w)?)?;
        match bias {
            Some(name) => Ok(tape.add_bias(y, b.get(name)?)?),
            None => Ok(y),
        }
    }

    fn attention(
        &self,
        tape: &mut Tape,
        b: &Bound,
        prefix: &str,
        x: Var,
        heads: usize,
        rope: Option<(&[usize], f64)>,
    ) -> Result<Var> {
        let shape = tape.value(x)?.shape().to_vec();
        let (t, d) = (shape[0], shape[1]);
        let hd = d / heads;
        let split = |tape: &mut Tape, w: &str| -> Result<Var> {
            let y = self.linear(tape, b, x, &format!("{prefix}.attn.{w}"), None)?;
            let y = tape.reshape(y, &[t, heads, hd])?;
            Ok(tape.permute_reshape(y, &[1, 0, 2], &[heads, t, hd])?)
        };
        let (mut q, mut k, v) = (split(tape, "wq")?, split(tape, "wk")?, split(tape, "wv")?);
        if let Some((positions, base)) = rope {
            q = tape.rope(q, positions, base)?;
            k = tape.rope(k, positions, base)?;
        }
        let kt = tape.permute_reshape(k, &[0, 2, 1], &[heads, hd, t])?;
        let scores = tape.matmul(q, kt)?;
        let mut scores = tape.scale(scores, 1.0 / (hd as f64).sqrt())?;
        if rope.is_some() {
            scores = tape.causal_mask(scores)?;
        }
        let attn = tape.softmax(scores, 2)?;
        let o = tape.matmul(attn, v)?;
        let o = tape.permute_reshape(o, &[1, 0, 2], &[t, d])?;
        self.linear(tape, b, o, &format!("{prefix}.attn.wo"), None)
    }

    /// Pre-norm block; `rope` also switches on the causal mask.
    fn block(
        &self,
        tape: &mut Tape,
        b: &Bound,
        prefix: &str,
        x: Var,
        heads: usize,
        rope: Option<(&[usize], f64)>,
    ) -> Result<Var> {
        let h = tape.layer_norm(
            x,
            b.get(&format!("{prefix}.ln1.g"))?,
            b.get(&format!("{prefix}.ln1.b"))?,
            LN_EPS,
        )?;
        let a = self.attention(tape, b, prefix, h, heads, rope)?;
        let x = tape.add(x, a)?;
        let h = tape.layer_norm(
            x,
            b.get(&format!("{prefix}.ln2.g"))?,
            b.get(&format!("{prefix}.ln2.b"))?,
            LN_EPS,
        )?;
        let h = self.linear(
            tape,
            b,
            h,
            &format!("{prefix}.mlp.w1"),
            Some(&format!("{prefix}.mlp.b1")),
        )?;
        let h = tape.gelu(h)?;
        let h = self.linear(
            tape,
            b,
            h,
            &format!("{prefix}.mlp.w2"),
            Some(&format!("{prefix}.mlp.b2")),
        )?;
        Ok(tape.add(x, h)?)
    }

    /// Patch matrix `[n, patch²·3]` to a `[side, side, d_vision]` feature map.
    pub fn encode_tile_on(&self, tape: &mut Tape, b: &Bound, patches: Var) -> Result<Var> {
        let cfg = &self.cfg;
        let shape = tape.value(patches)?.shape().to_vec();
        if shape.len() != 2 || shape[0] != cfg.patches_per_tile() || shape[1] != cfg.patch_dim() {
            return Err(ModelError::PatchCount {
                expected: cfg.patches_per_tile(),
                got: shape.first().copied().unwrap_or(0),
            });
        }
        let x = self.linear(tape, b, patches, "vision.patch.w", Some("vision.patch.b"))?;
        let mut x = tape.add(x, b.get("vision.pos")?)?;
        for i in 0..cfg.n_layers_vision {
            x = self.block(tape, b, &format!("vision.blocks.{i}"), x, cfg.vision_heads, None)?;
        }
        let side = cfg.patches_per_side();
        Ok(tape.reshape(x, &[side, side, cfg.d_vision])?)
    }

    /// Two-layer GELU MLP from shuffled channels to `d_model`, per token.
    pub fn project_on(&self, tape: &mut Tape, b: &Bound, tokens: Var) -> Result<Var> {
        let got = tape.value(tokens)?.shape().last().copied().unwrap_or(0);
        if got != self.cfg.shuffled_channels() {
            return Err(ModelError::ChannelMismatch {
                expected: self.cfg.shuffled_channels(),
                got,
            });
        }
        let h = self.linear(tape, b, tokens, "proj.w1", Some("proj.b1"))?;
        let h = tape.gelu(h)?;
        self.linear(tape, b, h, "proj.w2", Some("proj.b2"))
    }

    /// Encoded, shuffled and projected tokens for every sub-image, concatenated.
    pub fn visual_tokens_on(&self, tape: &mut Tape, b: &Bound, patches: &[Tensor]) -> Result<Option<Var>> {
        if patches.is_empty() {
            return Ok(None);
        }
        let r = ShuffleRatio::new(self.cfg.shuffle_r)?;
        let mut parts = Vec::with_capacity(patches.len());
        for p in patches {
            let p = tape.constant(p.clone());
            let fmap = self.encode_tile_on(tape, b, p)?;
            let shuffled = pixel_shuffle_on(tape, fmap, r)?;
            let flat = tape.reshape(shuffled, &[self.cfg.tokens_per_tile(), self.cfg.shuffled_channels()])?;
            parts.push(self.project_on(tape, b, flat)?);
        }
        Ok(Some(tape.concat_rows(&parts)?))
    }

    /// Decoder logits `[T, vocab]` with visual tokens written over the placeholders.
    pub fn logits_on(
        &self,
        tape: &mut Tape,
        b: &Bound,
        ids: &[usize],
        placeholders: &[usize],
        visual: Option<Var>,
    ) -> Result<Var> {
        let cfg = &self.cfg;
        if ids.len() > cfg.context_limit {
            return Err(ModelError::ContextOverflow {
                len: ids.len(),
                limit: cfg.context_limit,
            });
        }
        let n_visual = match visual {
            Some(v) => tape.value(v)?.shape()[0],
            None => 0,
        };
        if n_visual != placeholders.len() {
            return Err(ModelError::PlaceholderMismatch {
                placeholders: placeholders.len(),
                visual: n_visual,
            });
        }
        let mut x = tape.embedding(b.get("lm.embed")?, ids)?;
        if let Some(v) = visual {
            x = tape.scatter_rows(x, placeholders, v)?;
        }
        let positions: Vec<usize> = (0..ids.len()).collect();
        for i in 0..cfg.n_layers_lm {
            x = self.block(
                tape,
                b,
                &format!("lm.blocks.{i}"),
                x,
                cfg.n_heads,
                Some((&positions, cfg.rope_base)),
            )?;
        }
        let x = tape.layer_norm(x, b.get("lm.norm.g")?, b.get("lm.norm.b")?, LN_EPS)?;
        self.linear(tape, b, x, "lm.head.w", None)
    }

    pub fn encode_tile(&self, patches: &Tensor) -> Result<VisualFeatureMap> {
        let mut tape = Tape::new();
        let b = self.bind(&mut tape, false);
        let p = tape.constant(patches.clone());
        let out = self.encode_tile_on(&mut tape, &b, p)?;
        Ok(VisualFeatureMap::new(tape.value(out)?.clone())?)
    }

    /// Projects a shuffled feature map to `[tokens, d_model]`.
    pub fn project(&self, m: &VisualFeatureMap) -> Result<Tensor> {
        let mut tape = Tape::new();
        let b = self.bind(&mut tape, false);
        let flat = tape.constant(crate::compress::flatten_tokens(m));
        let out = self.project_on(&mut tape, &b, flat)?;
        Ok(tape.value(out)?.clone())
    }

    pub fn forward_ids(&self, ids: &[usize], placeholders: &[usize], patches: &[Tensor]) -> Result<Tensor> {
        let mut tape = Tape::new();
        let b = self.bind(&mut tape, false);
        let visual = self.visual_tokens_on(&mut tape, &b, patches)?;
        let out = self.logits_on(&mut tape, &b, ids, placeholders, visual)?;
        Ok(tape.value(out)?.clone())
    }

    /// Logits for every position of a rendered conversation.
    pub fn forward(&self, seq: &MultimodalSequence, media: &[Media]) -> Result<Tensor> {
        let patches = media_patches(media, &seq.media_refs(), &self.cfg)?;
        self.forward_ids(&seq.ids(), &seq.placeholder_positions(), &patches)
    }
}

/// Rotates queries and keys `[.., t, head_dim]` by their positions.
pub fn apply_rope(q: &Tensor, k: &Tensor, positions: &[usize], base: f64) -> Result<(Tensor, Tensor)> {
    Ok((ops::rope(q, positions, base)?, ops::rope(k, positions, base)?))
}
