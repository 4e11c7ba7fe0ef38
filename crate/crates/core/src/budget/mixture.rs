use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BudgetError, Result};
use crate::kv::KvMap;

const SUM_TOLERANCE: f64 = 1e-9;

/// Target fraction per data category plus the tie-breaking seed.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    categories: Vec<(String, f64)>,
    seed: u64,
}

impl MixtureSpec {
    pub fn new(categories: Vec<(String, f64)>, seed: u64) -> Result<Self> {
        if categories.is_empty() {
            return Err(BudgetError::Mixture("no categories".into()));
        }
        for (i, (name, f)) in categories.iter().enumerate() {
            if name.is_empty() || categories[..i].iter().any(|(n, _)| n == name) {
                return Err(BudgetError::Mixture(format!(
                    "category name {name:?} is empty or repeated"
                )));
            }
            if !(0.0..=1.0).contains(f) {
                return Err(BudgetError::Mixture(format!(
                    "fraction {f} for {name} is outside [0, 1]"
                )));
            }
        }
        let sum: f64 = categories.iter().map(|(_, f)| f).sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(BudgetError::Mixture(format!("fractions sum to {sum}, not 1")));
        }
        Ok(Self { categories, seed })
    }

    /// Every key except `seed` is a category name mapped to its fraction.
    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        let seed = kv.get_or("seed", 0)?;
        let categories = kv
            .keys()
            .filter(|&k| k != "seed")
            .map(|k| Ok((k.to_string(), kv.require::<f64>(k)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(categories, seed)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvMap::load(path)?)
    }

    pub fn categories(&self) -> &[(String, f64)] {
        &self.categories
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Exact per-category counts and the order in which samples are drawn.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixturePlan {
    names: Vec<String>,
    counts: Vec<usize>,
    sequence: Vec<usize>,
    sparse: bool,
}

impl MixturePlan {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Category index of each sample.
    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.sequence.iter().map(|&i| self.names[i].as_str())
    }

    pub fn count_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name).map(|i| self.counts[i])
    }

    pub fn fraction_of(&self, name: &str) -> Option<f64> {
        self.count_of(name)
            .map(|c| c as f64 / self.sequence.len().max(1) as f64)
    }

    /// Set when `n` is below `1 / smallest positive fraction`, so rare
    /// categories may get no samples at all.
    pub fn sparse_warning(&self) -> bool {
        self.sparse
    }
}

/// Largest-remainder counts, then a schedule where every prefix stays as
/// close as possible to those counts.
///
/// Category `i` gets `⌊n·fᵢ⌋` samples and the leftover seats go to the largest
/// remainders. The schedule repeatedly emits the category furthest behind its
/// pro-rata share. Equal remainders and equal deficits are resolved by a
/// priority order shuffled from the mixture seed.
pub fn plan_mixture(spec: &MixtureSpec, n: usize) -> MixturePlan {
    let k = spec.categories.len();
    let mut priority: Vec<usize> = (0..k).collect();
    priority.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut rank = vec![0; k];
    for (r, &i) in priority.iter().enumerate() {
        rank[i] = r;
    }

    let quotas: Vec<f64> = spec.categories.iter().map(|(_, f)| f * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| (q + SUM_TOLERANCE).floor() as usize).collect();
    let remainders: Vec<f64> = quotas
        .iter()
        .zip(&counts)
        .map(|(q, &c)| (q - c as f64).max(0.0))
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| remainders[b].total_cmp(&remainders[a]).then(rank[a].cmp(&rank[b])));
    let assigned: usize = counts.iter().sum();
    if assigned < n {
        for &i in order.iter().cycle().take(n - assigned) {
            counts[i] += 1;
        }
    } else {
        let mut excess = assigned - n;
        for &i in order.iter().rev() {
            let take = excess.min(counts[i]);
            counts[i] -= take;
            excess -= take;
        }
    }

    let mut sequence = Vec::with_capacity(n);
    let mut taken = vec![0usize; k];
    for t in 1..=n {
        // deficit of category i after t samples, scaled by n to stay integral
        let best = (0..k)
            .filter(|&i| taken[i] < counts[i])
            .max_by(|&a, &b| {
                let da = (t * counts[a]) as i128 - (taken[a] * n) as i128;
                let db = (t * counts[b]) as i128 - (taken[b] * n) as i128;
                da.cmp(&db).then(rank[b].cmp(&rank[a]))
            })
            .expect("counts sum to n");
        taken[best] += 1;
        sequence.push(best);
    }

    let min_positive = spec
        .categories
        .iter()
        .map(|(_, f)| *f)
        .filter(|&f| f > 0.0)
        .fold(f64::INFINITY, f64::min);
    MixturePlan {
        names: spec.categories.iter().map(|(n, _)| n.clone()).collect(),
        counts,
        sequence,
        sparse: (n as f64) * min_positive < 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(parts: &[(&str, f64)], seed: u64) -> MixtureSpec {
        MixtureSpec::new(parts.iter().map(|(n, f)| (n.to_string(), *f)).collect(), seed).unwrap()
    }

    #[test]
    fn single_category() {
        let p = plan_mixture(&spec(&[("a", 1.0)], 0), 17);
        assert!(p.labels().all(|l| l == "a"));
        assert_eq!(p.counts(), &[17]);
    }

    #[test]
    fn mixed_modality_fractions() {
        let s = spec(&[("text", 0.14), ("video", 0.33), ("image", 0.53)], 3);
        let p = plan_mixture(&s, 10_000);
        assert_eq!(p.counts(), &[1400, 3300, 5300]);
        let cot = plan_mixture(&spec(&[("cot", 0.0005), ("rest", 0.9995)], 9), 10_000);
        assert_eq!(cot.count_of("cot"), Some(5));
        assert!(!cot.sparse_warning());
        assert!(plan_mixture(&spec(&[("cot", 0.0005), ("rest", 0.9995)], 9), 100).sparse_warning());
    }

    #[test]
    fn prefixes_track_targets() {
        let s = spec(&[("a", 0.5), ("b", 0.3), ("c", 0.2)], 1);
        let p = plan_mixture(&s, 1000);
        let mut seen = [0usize; 3];
        for (t, &i) in p.sequence().iter().enumerate() {
            seen[i] += 1;
            for (j, (_, f)) in s.categories().iter().enumerate() {
                assert!((seen[j] as f64 - f * (t + 1) as f64).abs() <= 3.0);
            }
        }
    }

    #[test]
    fn ties_depend_on_seed_only() {
        let s = spec(&[("a", 0.25), ("b", 0.25), ("c", 0.25), ("d", 0.25)], 11);
        let a = plan_mixture(&s, 6);
        assert_eq!(a, plan_mixture(&s, 6));
        assert!(a.counts().iter().all(|&c| c == 1 || c == 2));
        let other = (0..20u64)
            .map(|seed| plan_mixture(&spec(&[("a", 0.25), ("b", 0.25), ("c", 0.25), ("d", 0.25)], seed), 6))
            .any(|p| p.sequence() != a.sequence());
        assert!(other);
    }

    #[test]
    fn invalid_specs() {
        let mk =
            |parts: Vec<(&str, f64)>| MixtureSpec::new(parts.into_iter().map(|(n, f)| (n.to_string(), f)).collect(), 0);
        assert!(mk(vec![]).is_err());
        assert!(mk(vec![("a", 0.5)]).is_err());
        assert!(mk(vec![("a", 0.5), ("a", 0.5)]).is_err());
        assert!(mk(vec![("a", 1.5), ("b", -0.5)]).is_err());
        let kv = KvMap::parse("seed = 4\ntext = 0.25\nimage = 0.75\n").unwrap();
        let s = MixtureSpec::from_kv(&kv).unwrap();
        assert_eq!(s.seed(), 4);
        assert_eq!(s.categories()[1].0, "image");
    }
}
