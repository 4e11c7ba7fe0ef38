//! Forward kernels shared by the free functions and the gradient tape.
//!
//! Shapes are exact everywhere except the leading batch dimensions of
//! [`matmul`], which broadcast numpy-style.

use super::{numel, Result, Tensor, TensorError};

// ── matmul ───────────────────────────────────────────────────────────

/// Resolved geometry of a (batched) matrix product.
#[derive(Debug, Clone)]
pub(crate) struct MatmulPlan {
    pub out_shape: Vec<usize>,
    pub m: usize,
    pub k: usize,
    pub n: usize,
    /// For every output batch entry, the batch entry of `a` and of `b`.
    pub pairs: Vec<(usize, usize)>,
}

pub(crate) fn matmul_plan(a: &[usize], b: &[usize]) -> Result<MatmulPlan> {
    let mismatch = || TensorError::ShapeMismatch {
        op: "matmul",
        lhs: a.to_vec(),
        rhs: b.to_vec(),
    };
    if a.len() < 2 || b.len() < 2 {
        return Err(mismatch());
    }
    let (m, k) = (a[a.len() - 2], a[a.len() - 1]);
    let (k2, n) = (b[b.len() - 2], b[b.len() - 1]);
    if k != k2 {
        return Err(mismatch());
    }
    let batch_a = &a[..a.len() - 2];
    let batch_b = &b[..b.len() - 2];
    let rank = batch_a.len().max(batch_b.len());
    let pad = |s: &[usize]| -> Vec<usize> {
        let mut v = vec![1; rank - s.len()];
        v.extend_from_slice(s);
        v
    };
    let (pa, pb) = (pad(batch_a), pad(batch_b));
    let mut batch = Vec::with_capacity(rank);
    for (&x, &y) in pa.iter().zip(&pb) {
        match (x, y) {
            _ if x == y => batch.push(x),
            (1, _) => batch.push(y),
            (_, 1) => batch.push(x),
            _ => return Err(mismatch()),
        }
    }
    let total = numel(&batch);
    let mut pairs = Vec::with_capacity(total);
    let mut idx = vec![0usize; rank];
    for _ in 0..total {
        let (mut ia, mut ib) = (0, 0);
        for d in 0..rank {
            ia = ia * pa[d] + if pa[d] == 1 { 0 } else { idx[d] };
            ib = ib * pb[d] + if pb[d] == 1 { 0 } else { idx[d] };
        }
        pairs.push((ia, ib));
        for d in (0..rank).rev() {
            idx[d] += 1;
            if idx[d] < batch[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    let mut out_shape = batch;
    out_shape.extend_from_slice(&[m, n]);
    Ok(MatmulPlan {
        out_shape,
        m,
        k,
        n,
        pairs,
    })
}

/// `c += a · b` for row-major `a[m,k]`, `b[k,n]`, `c[m,n]`.
pub(crate) fn gemm_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let c_row = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            let b_row = &b[p * n..(p + 1) * n];
            for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                *cv += av * bv;
            }
        }
    }
}

pub(crate) fn matmul_forward(plan: &MatmulPlan, a: &[f64], b: &[f64]) -> Vec<f64> {
    let (m, k, n) = (plan.m, plan.k, plan.n);
    let mut out = vec![0.0; plan.pairs.len() * m * n];
    for (o, &(ia, ib)) in plan.pairs.iter().enumerate() {
        gemm_acc(
            &a[ia * m * k..(ia + 1) * m * k],
            &b[ib * k * n..(ib + 1) * k * n],
            &mut out[o * m * n..(o + 1) * m * n],
            m,
            k,
            n,
        );
    }
    out
}

/// Accumulates `dA = dC · Bᵀ` and `dB = Aᵀ · dC`, summing over broadcast batches.
pub(crate) fn matmul_backward(
    plan: &MatmulPlan,
    a: &[f64],
    b: &[f64],
    d_out: &[f64],
    mut d_a: Option<&mut [f64]>,
    mut d_b: Option<&mut [f64]>,
) {
    let (m, k, n) = (plan.m, plan.k, plan.n);
    for (o, &(ia, ib)) in plan.pairs.iter().enumerate() {
        let dc = &d_out[o * m * n..(o + 1) * m * n];
        let a_blk = &a[ia * m * k..(ia + 1) * m * k];
        let b_blk = &b[ib * k * n..(ib + 1) * k * n];
        if let Some(da) = d_a.as_deref_mut() {
            let da_blk = &mut da[ia * m * k..(ia + 1) * m * k];
            for i in 0..m {
                let dc_row = &dc[i * n..(i + 1) * n];
                for p in 0..k {
                    let b_row = &b_blk[p * n..(p + 1) * n];
                    da_blk[i * k + p] += dot(dc_row, b_row);
                }
            }
        }
        if let Some(db) = d_b.as_deref_mut() {
            let db_blk = &mut db[ib * k * n..(ib + 1) * k * n];
            for i in 0..m {
                let dc_row = &dc[i * n..(i + 1) * n];
                for p in 0..k {
                    let av = a_blk[i * k + p];
                    let db_row = &mut db_blk[p * n..(p + 1) * n];
                    for (d, &g) in db_row.iter_mut().zip(dc_row) {
                        *d += av * g;
                    }
                }
            }
        }
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Batched matrix product `[.., m, k] × [.., k, n] → [.., m, n]`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let plan = matmul_plan(a.shape(), b.shape())?;
    let data = matmul_forward(&plan, a.data(), b.data());
    Tensor::new(plan.out_shape, data)
}

// ── softmax ──────────────────────────────────────────────────────────

/// (outer, len, inner) decomposition of a shape around `axis`.
pub(crate) fn axis_split(shape: &[usize], axis: usize) -> Result<(usize, usize, usize)> {
    if axis >= shape.len() {
        return Err(TensorError::InvalidAxis {
            axis,
            rank: shape.len(),
        });
    }
    Ok((numel(&shape[..axis]), shape[axis], numel(&shape[axis + 1..])))
}

pub(crate) fn softmax_forward(x: &[f64], (outer, len, inner): (usize, usize, usize)) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    for o in 0..outer {
        for i in 0..inner {
            let base = o * len * inner + i;
            let at = |l: usize| base + l * inner;
            let max = (0..len).map(|l| x[at(l)]).fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for l in 0..len {
                let e = (x[at(l)] - max).exp();
                y[at(l)] = e;
                sum += e;
            }
            for l in 0..len {
                y[at(l)] /= sum;
            }
        }
    }
    y
}

pub(crate) fn softmax_backward(y: &[f64], dy: &[f64], dx: &mut [f64], (outer, len, inner): (usize, usize, usize)) {
    for o in 0..outer {
        for i in 0..inner {
            let base = o * len * inner + i;
            let s: f64 = (0..len).map(|l| y[base + l * inner] * dy[base + l * inner]).sum();
            for l in 0..len {
                let at = base + l * inner;
                dx[at] += y[at] * (dy[at] - s);
            }
        }
    }
}

/// Softmax along `axis`, shifted by the running max so large logits never overflow.
pub fn softmax(x: &Tensor, axis: usize) -> Result<Tensor> {
    let split = axis_split(x.shape(), axis)?;
    Tensor::new(x.shape().to_vec(), softmax_forward(x.data(), split))
}

// ── permute + reshape ────────────────────────────────────────────────

/// For every element of the permuted tensor (row-major), its flat source index.
pub(crate) fn permute_gather(shape: &[usize], perm: &[usize]) -> Result<Vec<usize>> {
    let rank = shape.len();
    let mut seen = vec![false; rank];
    let valid = perm.len() == rank && perm.iter().all(|&p| p < rank && !std::mem::replace(&mut seen[p], true));
    if !valid {
        return Err(TensorError::InvalidPermutation {
            perm: perm.to_vec(),
            rank,
        });
    }
    let n = numel(shape);
    if perm.iter().enumerate().all(|(i, &p)| i == p) {
        return Ok((0..n).collect());
    }
    let mut strides = vec![1usize; rank];
    for d in (0..rank.saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * shape[d + 1];
    }
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let src_strides: Vec<usize> = perm.iter().map(|&p| strides[p]).collect();
    let mut gather = Vec::with_capacity(n);
    let mut idx = vec![0usize; rank];
    let mut offset = 0usize;
    for _ in 0..n {
        gather.push(offset);
        for d in (0..rank).rev() {
            idx[d] += 1;
            offset += src_strides[d];
            if idx[d] < out_shape[d] {
                break;
            }
            offset -= src_strides[d] * out_shape[d];
            idx[d] = 0;
        }
    }
    Ok(gather)
}

pub(crate) fn check_reshape(from: &[usize], to: &[usize]) -> Result<()> {
    if to.contains(&0) {
        return Err(TensorError::ZeroExtent(to.to_vec()));
    }
    if numel(from) != numel(to) {
        return Err(TensorError::ElementCount {
            shape: to.to_vec(),
            expected: numel(to),
            got: numel(from),
        });
    }
    Ok(())
}

/// Transposes by `perm` (copying into row-major order), then reinterprets as `new_shape`.
pub fn permute_reshape(x: &Tensor, perm: &[usize], new_shape: &[usize]) -> Result<Tensor> {
    let gather = permute_gather(x.shape(), perm)?;
    check_reshape(x.shape(), new_shape)?;
    let data = gather.iter().map(|&g| x.data()[g]).collect();
    Tensor::new(new_shape.to_vec(), data)
}

// ── masked cross-entropy ─────────────────────────────────────────────

pub(crate) fn check_cross_entropy(shape: &[usize], targets: &[usize], mask: &[bool]) -> Result<(usize, usize, usize)> {
    if shape.len() != 2 {
        return Err(TensorError::Rank {
            op: "cross_entropy_masked",
            expected: 2,
            shape: shape.to_vec(),
        });
    }
    let (t, v) = (shape[0], shape[1]);
    if targets.len() != t || mask.len() != t {
        return Err(TensorError::InvalidArgument {
            op: "cross_entropy_masked",
            detail: format!(
                "{t} logit rows but {} targets and {} mask entries",
                targets.len(),
                mask.len()
            ),
        });
    }
    if let Some(&bad) = targets.iter().find(|&&y| y >= v) {
        return Err(TensorError::IndexOutOfRange {
            op: "cross_entropy_masked",
            index: bad,
            extent: v,
        });
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(TensorError::EmptyLoss);
    }
    Ok((t, v, count))
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

pub(crate) fn cross_entropy_forward(logits: &[f64], v: usize, targets: &[usize], mask: &[bool], count: usize) -> f64 {
    let mut total = 0.0;
    for (t, (&y, &m)) in targets.iter().zip(mask).enumerate() {
        if m {
            let row = &logits[t * v..(t + 1) * v];
            total += log_sum_exp(row) - row[y];
        }
    }
    total / count as f64
}

pub(crate) fn cross_entropy_backward(
    logits: &[f64],
    v: usize,
    targets: &[usize],
    mask: &[bool],
    count: usize,
    d_loss: f64,
    d_logits: &mut [f64],
) {
    let scale = d_loss / count as f64;
    for (t, (&y, &m)) in targets.iter().zip(mask).enumerate() {
        if !m {
            continue;
        }
        let row = &logits[t * v..(t + 1) * v];
        let lse = log_sum_exp(row);
        let d_row = &mut d_logits[t * v..(t + 1) * v];
        for (d, &x) in d_row.iter_mut().zip(row) {
            *d += scale * (x - lse).exp();
        }
        d_row[y] -= scale;
    }
}

/// Mean negative log-likelihood over the positions where `mask` is true.
///
/// Masked positions are skipped entirely, so their targets never influence the result.
pub fn cross_entropy_masked(logits: &Tensor, targets: &[usize], mask: &[bool]) -> Result<f64> {
    let (_, v, count) = check_cross_entropy(logits.shape(), targets, mask)?;
    Ok(cross_entropy_forward(logits.data(), v, targets, mask, count))
}

// ── elementwise helpers ──────────────────────────────────────────────

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

pub(crate) fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

pub(crate) fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + 0.044715 * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * 0.044715 * x * x)
}

// ── rotary embedding ─────────────────────────────────────────────────

/// Rotates interleaved pairs `(2i, 2i+1)` of the last axis by `pos · base^(-2i/d)`.
///
/// `positions` has one entry per row of the second-to-last axis. With `inverse`
/// the rotation is undone, which is also the gradient map.
pub(crate) fn rope_rotate(
    data: &mut [f64],
    shape: &[usize],
    positions: &[usize],
    base: f64,
    inverse: bool,
) -> Result<()> {
    if shape.len() < 2 {
        return Err(TensorError::Rank {
            op: "rope",
            expected: 2,
            shape: shape.to_vec(),
        });
    }
    let d = shape[shape.len() - 1];
    let t = shape[shape.len() - 2];
    if !d.is_multiple_of(2) {
        return Err(TensorError::OddHeadDim(d));
    }
    if positions.len() != t {
        return Err(TensorError::InvalidArgument {
            op: "rope",
            detail: format!("{} positions for {t} rows", positions.len()),
        });
    }
    let half = d / 2;
    let inv_freq: Vec<f64> = (0..half).map(|i| base.powf(-2.0 * i as f64 / d as f64)).collect();
    let sign = if inverse { -1.0 } else { 1.0 };
    let mut table = Vec::with_capacity(t * half);
    for &p in positions {
        for &f in &inv_freq {
            let (s, c) = (p as f64 * f).sin_cos();
            table.push((sign * s, c));
        }
    }
    for (r, row) in data.chunks_exact_mut(d).enumerate() {
        let trig = &table[(r % t) * half..(r % t + 1) * half];
        for (pair, &(s, c)) in row.chunks_exact_mut(2).zip(trig) {
            let (x0, x1) = (pair[0], pair[1]);
            pair[0] = x0 * c - x1 * s;
            pair[1] = x0 * s + x1 * c;
        }
    }
    Ok(())
}

/// Rotary position embedding on `x[.., t, d]` with `θ_i = base^(-2i/d)`.
pub fn rope(x: &Tensor, positions: &[usize], base: f64) -> Result<Tensor> {
    let mut data = x.data().to_vec();
    rope_rotate(&mut data, x.shape(), positions, base, false)?;
    Tensor::new(x.shape().to_vec(), data)
}
