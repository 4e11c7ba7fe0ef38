//! Pixel shuffle (space-to-depth) over encoder feature maps.
//!
//! Each `r × r` block of visual tokens folds into one token with `r²` times
//! the channels, so the token count drops by exactly `r²`. Within a shuffled
//! token, channels are ordered `(di, dj, k)` lexicographically:
//!
//! ```text
//! out[i, j, (di·r + dj)·c + k] = in[i·r + di, j·r + dj, k]
//! ```

use thiserror::Error;

use crate::tensor::{Tape, Tensor, TensorError, Var};

#[derive(Debug, Error)]
pub enum CompressError {
    #[error("shuffle ratio must be positive")]
    ZeroRatio,
    #[error("feature map {h}x{w} is not divisible by shuffle ratio {r}")]
    SpatialNotDivisible { h: usize, w: usize, r: usize },
    #[error("{c} channels are not divisible by r² = {}", r * r)]
    ChannelsNotDivisible { c: usize, r: usize },
    #[error("feature map must be rank 3 [h, w, c], got {0:?}")]
    BadShape(Vec<usize>),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

pub type Result<T, E = CompressError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShuffleRatio(usize);

impl ShuffleRatio {
    pub fn new(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(CompressError::ZeroRatio);
        }
        Ok(Self(r))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Token reduction factor `r²`.
    pub fn factor(self) -> usize {
        self.0 * self.0
    }
}

/// `h × w` grid of `c`-channel visual features.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualFeatureMap {
    data: Tensor,
}

impl VisualFeatureMap {
    pub fn new(data: Tensor) -> Result<Self> {
        if data.rank() != 3 {
            return Err(CompressError::BadShape(data.shape().to_vec()));
        }
        Ok(Self { data })
    }

    pub fn from_fn(h: usize, w: usize, c: usize, f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new(Tensor::from_fn([h, w, c], f)?)
    }

    pub fn h(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn w(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn c(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn tokens(&self) -> usize {
        self.h() * self.w()
    }

    pub fn tensor(&self) -> &Tensor {
        &self.data
    }

    pub fn into_tensor(self) -> Tensor {
        self.data
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data.data()[(i * self.w() + j) * self.c() + k]
    }
}

fn check_spatial(shape: &[usize], r: ShuffleRatio) -> Result<(usize, usize, usize)> {
    let [h, w, c] = shape else {
        return Err(CompressError::BadShape(shape.to_vec()));
    };
    let r = r.get();
    if h % r != 0 || w % r != 0 {
        return Err(CompressError::SpatialNotDivisible { h: *h, w: *w, r });
    }
    Ok((*h, *w, *c))
}

fn check_channels(shape: &[usize], r: ShuffleRatio) -> Result<(usize, usize, usize)> {
    let [h, w, c] = shape else {
        return Err(CompressError::BadShape(shape.to_vec()));
    };
    if c % r.factor() != 0 {
        return Err(CompressError::ChannelsNotDivisible { c: *c, r: r.get() });
    }
    Ok((*h, *w, *c))
}

// [h, w, c] -> [h/r, r, w/r, r, c] -> (i, j, di, dj, k) -> [h/r, w/r, r²c]
const SHUFFLE_PERM: [usize; 5] = [0, 2, 1, 3, 4];
// [h/r, w/r, r, r, c'] -> (i, di, j, dj, k) -> [h, w, c']
const UNSHUFFLE_PERM: [usize; 5] = [0, 2, 1, 3, 4];

/// Space-to-depth: `[h, w, c] → [h/r, w/r, c·r²]`.
pub fn pixel_shuffle(m: &VisualFeatureMap, r: ShuffleRatio) -> Result<VisualFeatureMap> {
    let (h, w, c) = check_spatial(m.data.shape(), r)?;
    let r = r.get();
    let split = m.data.reshape([h / r, r, w / r, r, c])?;
    let out = crate::tensor::ops::permute_reshape(&split, &SHUFFLE_PERM, &[h / r, w / r, r * r * c])?;
    VisualFeatureMap::new(out)
}

/// Depth-to-space, the exact inverse of [`pixel_shuffle`].
pub fn pixel_unshuffle(m: &VisualFeatureMap, r: ShuffleRatio) -> Result<VisualFeatureMap> {
    let (h, w, c) = check_channels(m.data.shape(), r)?;
    let (r, c0) = (r.get(), c / r.factor());
    let split = m.data.reshape([h, w, r, r, c0])?;
    let out = crate::tensor::ops::permute_reshape(&split, &UNSHUFFLE_PERM, &[h * r, w * r, c0])?;
    VisualFeatureMap::new(out)
}

/// Raster-order token matrix `[h·w, c]`; token `i·w + j` holds `m[i, j, ·]`.
pub fn flatten_tokens(m: &VisualFeatureMap) -> Tensor {
    m.data.reshape([m.tokens(), m.c()]).expect("element count is unchanged")
}

/// Differentiable [`pixel_shuffle`] on a recorded `[h, w, c]` value.
pub fn pixel_shuffle_on(tape: &mut Tape, x: Var, r: ShuffleRatio) -> Result<Var> {
    let (h, w, c) = check_spatial(tape.value(x)?.shape(), r)?;
    let r = r.get();
    let split = tape.reshape(x, &[h / r, r, w / r, r, c])?;
    Ok(tape.permute_reshape(split, &SHUFFLE_PERM, &[h / r, w / r, r * r * c])?)
}
