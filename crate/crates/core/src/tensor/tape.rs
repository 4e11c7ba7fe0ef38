//! Wengert-style tape: ops are appended in execution order, so replaying the
//! list backwards is already a reverse topological order.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};

use super::ops::{self, MatmulPlan};
use super::{Result, Tensor, TensorError};

static NEXT_TAPE_ID: AtomicU32 = AtomicU32::new(1);

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var {
    tape: u32,
    idx: u32,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var, Box<MatmulPlan>),
    Add(Var, Var),
    Mul(Var, Var),
    AddBias(Var, Var),
    Scale(Var, f64),
    Gelu(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Vec<f64>,
        rstd: Vec<f64>,
    },
    Softmax(Var, (usize, usize, usize)),
    CausalMask(Var),
    PermuteReshape(Var, Vec<usize>),
    Rope {
        x: Var,
        positions: Vec<usize>,
        base: f64,
    },
    Embedding(Var, Vec<usize>),
    ScatterRows {
        base: Var,
        src: Var,
        rows: Vec<usize>,
    },
    ConcatRows(Vec<Var>),
    Sum(Var),
    CrossEntropy {
        logits: Var,
        targets: Vec<usize>,
        mask: Vec<bool>,
        count: usize,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Records a forward pass so that [`Tape::backward`] can differentiate it.
///
/// A tape is single-use: once `backward` has run, recording a new forward
/// pass on a fresh tape is required.
#[derive(Debug)]
pub struct Tape {
    id: u32,
    nodes: Vec<Node>,
    consumed: bool,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients of every `requires_grad` leaf, keyed by its [`Var`].
#[derive(Debug, Default)]
pub struct Gradients {
    by_leaf: HashMap<Var, Tensor>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.by_leaf.get(&v)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.by_leaf.remove(&v)
    }

    pub fn len(&self) -> usize {
        self.by_leaf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_leaf.is_empty()
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(TensorError::ShapeMismatch {
            op,
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    Ok(())
}

fn last_dim(op: &'static str, t: &Tensor) -> Result<usize> {
    t.shape().last().copied().ok_or_else(|| TensorError::Rank {
        op,
        expected: 1,
        shape: Vec::new(),
    })
}

fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
            consumed: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn node(&self, v: Var) -> Result<&Node> {
        if v.tape != self.id {
            return Err(TensorError::DetachedVar);
        }
        Ok(&self.nodes[v.idx as usize])
    }

    pub fn value(&self, v: Var) -> Result<&Tensor> {
        Ok(&self.node(v)?.value)
    }

    fn push(&mut self, value: Tensor, op: Op, parents: &[Var]) -> Var {
        let needs_grad = match op {
            Op::Leaf => value.requires_grad(),
            _ => parents.iter().any(|p| self.nodes[p.idx as usize].needs_grad),
        };
        let idx = self.nodes.len() as u32;
        self.nodes.push(Node { value, op, needs_grad });
        Var { tape: self.id, idx }
    }

    /// Records an input. Its gradient is collected iff `t.requires_grad()`.
    pub fn leaf(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, &[])
    }

    /// Records a leaf that never receives a gradient.
    pub fn constant(&mut self, t: Tensor) -> Var {
        self.leaf(t.with_grad(false))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.node(a)?.value, &self.node(b)?.value);
        let plan = ops::matmul_plan(ta.shape(), tb.shape())?;
        let data = ops::matmul_forward(&plan, ta.data(), tb.data());
        let value = Tensor::new(plan.out_shape.clone(), data)?;
        Ok(self.push(value, Op::MatMul(a, b, Box::new(plan)), &[a, b]))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.node(a)?.value, &self.node(b)?.value);
        same_shape("add", ta, tb)?;
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x + y).collect();
        let value = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Add(a, b), &[a, b]))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.node(a)?.value, &self.node(b)?.value);
        same_shape("mul", ta, tb)?;
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
        let value = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Mul(a, b), &[a, b]))
    }

    /// Adds a bias vector `[n]` to every row of `x[.., n]`.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (tx, tb) = (&self.node(x)?.value, &self.node(bias)?.value);
        let n = last_dim("add_bias", tx)?;
        if tb.shape() != [n] {
            return Err(TensorError::ShapeMismatch {
                op: "add_bias",
                lhs: tx.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            });
        }
        let mut data = tx.data().to_vec();
        for row in data.chunks_exact_mut(n) {
            add_into(row, tb.data());
        }
        let value = Tensor::new(tx.shape().to_vec(), data)?;
        Ok(self.push(value, Op::AddBias(x, bias), &[x, bias]))
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Result<Var> {
        let tx = &self.node(x)?.value;
        let data = tx.data().iter().map(|v| v * s).collect();
        let value = Tensor::new(tx.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Scale(x, s), &[x]))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&mut self, x: Var) -> Result<Var> {
        let tx = &self.node(x)?.value;
        let data = tx.data().iter().map(|&v| ops::gelu(v)).collect();
        let value = Tensor::new(tx.shape().to_vec(), data)?;
        Ok(self.push(value, Op::Gelu(x), &[x]))
    }

    /// Layer normalization over the last axis with learned gain and bias.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        let tx = &self.node(x)?.value;
        let n = last_dim("layer_norm", tx)?;
        for p in [gain, bias] {
            let tp = &self.node(p)?.value;
            if tp.shape() != [n] {
                return Err(TensorError::ShapeMismatch {
                    op: "layer_norm",
                    lhs: tx.shape().to_vec(),
                    rhs: tp.shape().to_vec(),
                });
            }
        }
        let (g, b) = (self.node(gain)?.value.data(), self.node(bias)?.value.data());
        let rows = tx.numel() / n;
        let mut xhat = Vec::with_capacity(tx.numel());
        let mut rstd = Vec::with_capacity(rows);
        let mut out = Vec::with_capacity(tx.numel());
        for row in tx.data().chunks_exact(n) {
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let r = 1.0 / (var + eps).sqrt();
            rstd.push(r);
            for (j, &v) in row.iter().enumerate() {
                let h = (v - mean) * r;
                xhat.push(h);
                out.push(h * g[j] + b[j]);
            }
        }
        let value = Tensor::new(tx.shape().to_vec(), out)?;
        let op = Op::LayerNorm {
            x,
            gain,
            bias,
            xhat,
            rstd,
        };
        Ok(self.push(value, op, &[x, gain, bias]))
    }

    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        let tx = &self.node(x)?.value;
        let split = ops::axis_split(tx.shape(), axis)?;
        let value = Tensor::new(tx.shape().to_vec(), ops::softmax_forward(tx.data(), split))?;
        Ok(self.push(value, Op::Softmax(x, split), &[x]))
    }

    /// Sets entries above the diagonal of the trailing `[t, t]` block to `-inf`.
    pub fn causal_mask(&mut self, x: Var) -> Result<Var> {
        let tx = &self.node(x)?.value;
        let s = tx.shape();
        if s.len() < 2 || s[s.len() - 1] != s[s.len() - 2] {
            return Err(TensorError::InvalidArgument {
                op: "causal_mask",
                detail: format!("trailing dims of {s:?} are not square"),
            });
        }
        let t = s[s.len() - 1];
        let mut data = tx.data().to_vec();
        for block in data.chunks_exact_mut(t * t) {
            for i in 0..t {
                for v in &mut block[i * t + i + 1..(i + 1) * t] {
                    *v = f64::NEG_INFINITY;
                }
            }
        }
        let value = Tensor::new(s.to_vec(), data)?;
        Ok(self.push(value, Op::CausalMask(x), &[x]))
    }

    /// Transpose by `perm` then reshape to `new_shape`; see [`ops::permute_reshape`].
    pub fn permute_reshape(&mut self, x: Var, perm: &[usize], new_shape: &[usize]) -> Result<Var> {
        let tx = &self.node(x)?.value;
        let gather = ops::permute_gather(tx.shape(), perm)?;
        ops::check_reshape(tx.shape(), new_shape)?;
        let data = gather.iter().map(|&g| tx.data()[g]).collect();
        let value = Tensor::new(new_shape.to_vec(), data)?;
        Ok(self.push(value, Op::PermuteReshape(x, gather), &[x]))
    }

    pub fn reshape(&mut self, x: Var, new_shape: &[usize]) -> Result<Var> {
        let rank = self.node(x)?.value.rank();
        let perm: Vec<usize> = (0..rank).collect();
        self.permute_reshape(x, &perm, new_shape)
    }

    /// Rotary position embedding on `x[.., t, d]`; `positions` has length `t`.
    pub fn rope(&mut self, x: Var, positions: &[usize], base: f64) -> Result<Var> {
        let tx = &self.node(x)?.value;
        let mut data = tx.data().to_vec();
        ops::rope_rotate(&mut data, tx.shape(), positions, base, false)?;
        let value = Tensor::new(tx.shape().to_vec(), data)?;
        let op = Op::Rope {
            x,
            positions: positions.to_vec(),
            base,
        };
        Ok(self.push(value, op, &[x]))
    }

    /// Row lookup `table[ids[t]]` producing `[len(ids), d]`.
    pub fn embedding(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let tt = &self.node(table)?.value;
        if tt.rank() != 2 {
            return Err(TensorError::Rank {
                op: "embedding",
                expected: 2,
                shape: tt.shape().to_vec(),
            });
        }
        let (v, d) = (tt.shape()[0], tt.shape()[1]);
        let mut data = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= v {
                return Err(TensorError::IndexOutOfRange {
                    op: "embedding",
                    index: id,
                    extent: v,
                });
            }
            data.extend_from_slice(&tt.data()[id * d..(id + 1) * d]);
        }
        let value = Tensor::new(vec![ids.len(), d], data)?;
        Ok(self.push(value, Op::Embedding(table, ids.to_vec()), &[table]))
    }

    /// Copy of `base[T, d]` with row `rows[i]` replaced by `src[i]`.
    pub fn scatter_rows(&mut self, base: Var, rows: &[usize], src: Var) -> Result<Var> {
        let (tb, ts) = (&self.node(base)?.value, &self.node(src)?.value);
        if tb.rank() != 2 || ts.rank() != 2 || tb.shape()[1] != ts.shape()[1] || ts.shape()[0] != rows.len() {
            return Err(TensorError::ShapeMismatch {
                op: "scatter_rows",
                lhs: tb.shape().to_vec(),
                rhs: ts.shape().to_vec(),
            });
        }
        let (t, d) = (tb.shape()[0], tb.shape()[1]);
        let mut seen = vec![false; t];
        let mut data = tb.data().to_vec();
        for (i, &r) in rows.iter().enumerate() {
            if r >= t {
                return Err(TensorError::IndexOutOfRange {
                    op: "scatter_rows",
                    index: r,
                    extent: t,
                });
            }
            if std::mem::replace(&mut seen[r], true) {
                return Err(TensorError::InvalidArgument {
                    op: "scatter_rows",
                    detail: format!("row {r} written twice"),
                });
            }
            data[r * d..(r + 1) * d].copy_from_slice(&ts.data()[i * d..(i + 1) * d]);
        }
        let value = Tensor::new(tb.shape().to_vec(), data)?;
        let op = Op::ScatterRows {
            base,
            src,
            rows: rows.to_vec(),
        };
        Ok(self.push(value, op, &[base, src]))
    }

    /// Concatenates along axis 0; trailing dims must agree.
    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or(TensorError::InvalidArgument {
            op: "concat_rows",
            detail: "no inputs".into(),
        })?;
        let tail = self.node(*first)?.value.shape().get(1..).unwrap_or(&[]).to_vec();
        let mut rows = 0;
        let mut data = Vec::new();
        for &p in parts {
            let tp = &self.node(p)?.value;
            if tp.rank() == 0 || tp.shape()[1..] != tail[..] {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_rows",
                    lhs: self.node(*first)?.value.shape().to_vec(),
                    rhs: tp.shape().to_vec(),
                });
            }
            rows += tp.shape()[0];
            data.extend_from_slice(tp.data());
        }
        let mut shape = vec![rows];
        shape.extend_from_slice(&tail);
        let value = Tensor::new(shape, data)?;
        Ok(self.push(value, Op::ConcatRows(parts.to_vec()), parts))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let s = self.node(x)?.value.data().iter().sum();
        Ok(self.push(Tensor::scalar(s), Op::Sum(x), &[x]))
    }

    /// Scalar masked cross-entropy; see [`ops::cross_entropy_masked`].
    pub fn cross_entropy_masked(&mut self, logits: Var, targets: &[usize], mask: &[bool]) -> Result<Var> {
        let tl = &self.node(logits)?.value;
        let (_, v, count) = ops::check_cross_entropy(tl.shape(), targets, mask)?;
        let loss = ops::cross_entropy_forward(tl.data(), v, targets, mask, count);
        let op = Op::CrossEntropy {
            logits,
            targets: targets.to_vec(),
            mask: mask.to_vec(),
            count,
        };
        Ok(self.push(Tensor::scalar(loss), op, &[logits]))
    }

    /// Reverse sweep from a scalar `loss`.
    ///
    /// Every leaf created with `requires_grad` gets exactly one gradient entry
    /// (zeros when it does not influence the loss).
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        let root = self.node(loss)?;
        if self.consumed {
            return Err(TensorError::TapeConsumed);
        }
        if root.value.numel() != 1 {
            return Err(TensorError::NonScalarRoot(root.value.shape().to_vec()));
        }
        self.consumed = true;

        let n = loss.idx as usize + 1;
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; n];
        grads[n - 1] = Some(vec![1.0]);
        let mut out = Gradients::default();

        for i in (0..n).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let var = Var {
                tape: self.id,
                idx: i as u32,
            };
            let Some(g) = grads[i].take() else {
                if matches!(node.op, Op::Leaf) {
                    let zeros = Tensor::zeros(node.value.shape().to_vec())?;
                    out.by_leaf.insert(var, zeros);
                }
                continue;
            };
            if matches!(node.op, Op::Leaf) {
                out.by_leaf.insert(var, Tensor::new(node.value.shape().to_vec(), g)?);
                continue;
            }
            self.propagate(i, &g, &mut grads);
        }
        // leaves recorded after the loss cannot influence it
        for i in n..self.nodes.len() {
            let node = &self.nodes[i];
            if matches!(node.op, Op::Leaf) && node.needs_grad {
                let var = Var {
                    tape: self.id,
                    idx: i as u32,
                };
                out.by_leaf.insert(var, Tensor::zeros(node.value.shape().to_vec())?);
            }
        }
        Ok(out)
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let nodes = &self.nodes;
        let wants = |v: Var| nodes[v.idx as usize].needs_grad;
        let val = |v: Var| &nodes[v.idx as usize].value;
        // Lazily materializes a zeroed gradient buffer for `v`.
        fn slot<'a>(grads: &'a mut [Option<Vec<f64>>], nodes: &[Node], v: Var) -> &'a mut Vec<f64> {
            grads[v.idx as usize].get_or_insert_with(|| vec![0.0; nodes[v.idx as usize].value.numel()])
        }

        match &nodes[i].op {
            Op::Leaf => {}
            Op::MatMul(a, b, plan) => {
                let (a, b) = (*a, *b);
                let mut da = wants(a).then(|| vec![0.0; val(a).numel()]);
                let mut db = wants(b).then(|| vec![0.0; val(b).numel()]);
                ops::matmul_backward(
                    plan,
                    val(a).data(),
                    val(b).data(),
                    g,
                    da.as_deref_mut(),
                    db.as_deref_mut(),
                );
                if let Some(da) = da {
                    add_into(slot(grads, nodes, a), &da);
                }
                if let Some(db) = db {
                    add_into(slot(grads, nodes, b), &db);
                }
            }
            Op::Add(a, b) => {
                for v in [*a, *b] {
                    if wants(v) {
                        add_into(slot(grads, nodes, v), g);
                    }
                }
            }
            Op::Mul(a, b) => {
                let (a, b) = (*a, *b);
                if wants(a) {
                    let s = slot(grads, nodes, a);
                    for ((d, &gv), &bv) in s.iter_mut().zip(g).zip(val(b).data()) {
                        *d += gv * bv;
                    }
                }
                if wants(b) {
                    let s = slot(grads, nodes, b);
                    for ((d, &gv), &av) in s.iter_mut().zip(g).zip(val(a).data()) {
                        *d += gv * av;
                    }
                }
            }
            Op::AddBias(x, bias) => {
                if wants(*x) {
                    add_into(slot(grads, nodes, *x), g);
                }
                if wants(*bias) {
                    let s = slot(grads, nodes, *bias);
                    let n = s.len();
                    for row in g.chunks_exact(n) {
                        add_into(s, row);
                    }
                }
            }
            Op::Scale(x, c) => {
                if wants(*x) {
                    let s = slot(grads, nodes, *x);
                    for (d, &gv) in s.iter_mut().zip(g) {
                        *d += gv * c;
                    }
                }
            }
            Op::Gelu(x) => {
                if wants(*x) {
                    let xs = val(*x).data();
                    let s = slot(grads, nodes, *x);
                    for ((d, &gv), &xv) in s.iter_mut().zip(g).zip(xs) {
                        *d += gv * ops::gelu_grad(xv);
                    }
                }
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                rstd,
            } => {
                let n = val(*gain).numel();
                if wants(*gain) {
                    let s = slot(grads, nodes, *gain);
                    for (grow, hrow) in g.chunks_exact(n).zip(xhat.chunks_exact(n)) {
                        for j in 0..n {
                            s[j] += grow[j] * hrow[j];
                        }
                    }
                }
                if wants(*bias) {
                    let s = slot(grads, nodes, *bias);
                    for grow in g.chunks_exact(n) {
                        add_into(s, grow);
                    }
                }
                if wants(*x) {
                    let gain_v = val(*gain).data();
                    let s = slot(grads, nodes, *x);
                    let rows = g.chunks_exact(n).zip(xhat.chunks_exact(n)).zip(s.chunks_exact_mut(n));
                    for (((grow, hrow), drow), &r) in rows.zip(rstd) {
                        let dh: Vec<f64> = (0..n).map(|j| grow[j] * gain_v[j]).collect();
                        let mean_dh = dh.iter().sum::<f64>() / n as f64;
                        let mean_dh_h = ops::dot(&dh, hrow) / n as f64;
                        for j in 0..n {
                            drow[j] += r * (dh[j] - mean_dh - hrow[j] * mean_dh_h);
                        }
                    }
                }
            }
            Op::Softmax(x, split) => {
                if wants(*x) {
                    let y = nodes[i].value.data();
                    ops::softmax_backward(y, g, slot(grads, nodes, *x), *split);
                }
            }
            Op::CausalMask(x) => {
                if wants(*x) {
                    let shape = val(*x).shape();
                    let t = shape[shape.len() - 1];
                    let s = slot(grads, nodes, *x);
                    for (blk_d, blk_g) in s.chunks_exact_mut(t * t).zip(g.chunks_exact(t * t)) {
                        for r in 0..t {
                            for c in 0..=r {
                                blk_d[r * t + c] += blk_g[r * t + c];
                            }
                        }
                    }
                }
            }
            Op::PermuteReshape(x, gather) => {
                if wants(*x) {
                    let s = slot(grads, nodes, *x);
                    for (&src, &gv) in gather.iter().zip(g) {
                        s[src] += gv;
                    }
                }
            }
            Op::Rope { x, positions, base } => {
                if wants(*x) {
                    let mut back = g.to_vec();
                    ops::rope_rotate(&mut back, val(*x).shape(), positions, *base, true)
                        .expect("shape validated on the forward pass");
                    add_into(slot(grads, nodes, *x), &back);
                }
            }
            Op::Embedding(table, ids) => {
                if wants(*table) {
                    let d = val(*table).shape()[1];
                    let s = slot(grads, nodes, *table);
                    for (t, &id) in ids.iter().enumerate() {
                        add_into(&mut s[id * d..(id + 1) * d], &g[t * d..(t + 1) * d]);
                    }
                }
            }
            Op::ScatterRows { base, src, rows } => {
                let d = val(*base).shape()[1];
                if wants(*base) {
                    let mut pass = g.to_vec();
                    for &r in rows {
                        pass[r * d..(r + 1) * d].fill(0.0);
                    }
                    add_into(slot(grads, nodes, *base), &pass);
                }
                if wants(*src) {
                    let s = slot(grads, nodes, *src);
                    for (k, &r) in rows.iter().enumerate() {
                        add_into(&mut s[k * d..(k + 1) * d], &g[r * d..(r + 1) * d]);
                    }
                }
            }
            Op::ConcatRows(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let len = val(p).numel();
                    if wants(p) {
                        add_into(slot(grads, nodes, p), &g[offset..offset + len]);
                    }
                    offset += len;
                }
            }
            Op::Sum(x) => {
                if wants(*x) {
                    let s = slot(grads, nodes, *x);
                    for d in s.iter_mut() {
                        *d += g[0];
                    }
                }
            }
            Op::CrossEntropy {
                logits,
                targets,
                mask,
                count,
            } => {
                if wants(*logits) {
                    let tl = val(*logits);
                    let v = tl.shape()[1];
                    let s = slot(grads, nodes, *logits);
                    ops::cross_entropy_backward(tl.data(), v, targets, mask, *count, g[0], s);
                }
            }
        }
    }
}
