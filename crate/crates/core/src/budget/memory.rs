use std::fmt;

use super::PipelineConfig;

/// Runtime memory not attributable to weights, cache or activations.
pub const FIXED_OVERHEAD_BYTES: u64 = 256 << 20;

/// Live activation width at peak, in multiples of the hidden size.
const ACTIVATION_WIDTH: u64 = 4;

/// Keys plus values for every layer: `2 · layers · kv_heads · head_dim · seq · batch · bytes`.
pub fn kv_cache_bytes(cfg: &PipelineConfig, seq_len: u64, batch: u64, bytes_per_scalar: u64) -> u64 {
    2 * cfg.lm_layers * cfg.kv_heads * cfg.head_dim * seq_len * batch * bytes_per_scalar
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RamEstimate {
    pub params: u64,
    pub kv: u64,
    pub activations: u64,
    pub overhead: u64,
}

impl RamEstimate {
    pub fn total(&self) -> u64 {
        self.params + self.kv + self.activations + self.overhead
    }
}

/// Inference memory for `batch` sequences of `seq_len` tokens.
pub fn ram_estimate(cfg: &PipelineConfig, seq_len: u64, batch: u64, bytes_per_scalar: u64) -> RamEstimate {
    RamEstimate {
        params: cfg.total_params() * cfg.bytes_per_param,
        kv: kv_cache_bytes(cfg, seq_len, batch, bytes_per_scalar),
        activations: batch * seq_len * cfg.hidden * ACTIVATION_WIDTH * bytes_per_scalar,
        overhead: FIXED_OVERHEAD_BYTES,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Encoder holds more than half the parameters.
    EncoderDominant,
    Balanced,
    /// Encoder holds less than a fifth of the parameters.
    LmDominant,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::EncoderDominant => "encoder-dominant",
            Regime::Balanced => "balanced",
            Regime::LmDominant => "lm-dominant",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub encoder: u64,
    pub lm: u64,
    /// `encoder / (encoder + lm)`.
    pub ratio: f64,
    pub regime: Regime,
}

/// Encoder share of the parameters and its regime. Thresholds compare
/// integers, so labels never change when both counts are scaled together.
pub fn allocation_report(encoder: u64, lm: u64) -> Allocation {
    let (e, l) = (encoder as u128, lm as u128);
    let regime = if e > l {
        Regime::EncoderDominant
    } else if 4 * e < l {
        Regime::LmDominant
    } else {
        Regime::Balanced
    };
    Allocation {
        encoder,
        lm,
        ratio: encoder as f64 / (encoder + lm) as f64,
        regime,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_arithmetic() {
        let micro = PipelineConfig {
            lm_layers: 2,
            kv_heads: 2,
            head_dim: 8,
            ..PipelineConfig::preset("smolvlm-256m").unwrap()
        };
        assert_eq!(kv_cache_bytes(&micro, 16, 1, 4), 4096);
        assert_eq!(kv_cache_bytes(&micro, 0, 1, 4), 0);
        assert_eq!(kv_cache_bytes(&micro, 16, 2, 4), 8192);
    }

    #[test]
    fn regimes() {
        let a = allocation_report(428_000_000, 135_000_000);
        assert_eq!(a.regime, Regime::EncoderDominant);
        assert!((a.ratio - 0.76).abs() < 0.005);
        let b = allocation_report(93_000_000, 1_700_000_000);
        assert_eq!(b.regime, Regime::LmDominant);
        assert!((b.ratio - 0.05).abs() < 0.005);
        assert_eq!(allocation_report(93, 135).regime, Regime::Balanced);
        assert_eq!(allocation_report(1, 1).regime, Regime::Balanced);
        assert_eq!(allocation_report(1, 4).regime, Regime::Balanced);
        assert_eq!(allocation_report(1, 5).regime, Regime::LmDominant);
    }

    #[test]
    fn ram_orders_presets() {
        let totals: Vec<u64> = PipelineConfig::presets()
            .iter()
            .map(|c| ram_estimate(c, 1024, 1, 2).total())
            .collect();
        assert!(totals.windows(2).all(|w| w[0] < w[1]));
    }
}
