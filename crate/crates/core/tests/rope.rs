use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smolpipe_core::model::{apply_rope, ModelConfig, ToyVlm};
use smolpipe_core::Tensor;

const HEAD_DIM: usize = 16;
const MAX_POSITION: usize = 16_383;

fn vector(rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn([1, HEAD_DIM], |_| rng.random_range(-1.0..1.0)).unwrap()
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Rotated copies of `q` at `m` and `k` at `n`.
fn rotated(q: &Tensor, k: &Tensor, m: usize, n: usize, base: f64) -> (Tensor, Tensor) {
    (
        apply_rope(q, q, &[m], base).unwrap().0,
        apply_rope(k, k, &[n], base).unwrap().0,
    )
}

#[test]
fn scores_depend_only_on_offset() {
    for base in [10_000.0, 273_000.0] {
        let mut rng = ChaCha8Rng::seed_from_u64(base as u64);
        for _ in 0..1000 {
            let (q, k) = (vector(&mut rng), vector(&mut rng));
            let s = rng.random_range(0..=MAX_POSITION / 2);
            let m = rng.random_range(0..=MAX_POSITION - s);
            let n = rng.random_range(0..=MAX_POSITION - s);
            let (qm, kn) = rotated(&q, &k, m, n, base);
            let (qs, ks) = rotated(&q, &k, m + s, n + s, base);
            let gap = (dot(&qm, &kn) - dot(&qs, &ks)).abs();
            assert!(gap < 1e-9, "base {base} m {m} n {n} s {s}: {gap:e}");
        }
    }
}

#[test]
fn long_positions_stay_finite_and_distinct() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let q = vector(&mut rng);
    let norm = dot(&q, &q).sqrt();
    for base in [10_000.0, 273_000.0] {
        let mut previous: Option<Tensor> = None;
        for p in (MAX_POSITION - 64)..=MAX_POSITION {
            let (r, _) = rotated(&q, &q, p, p, base);
            assert!(r.data().iter().all(|v| v.is_finite()));
            assert!((dot(&r, &r).sqrt() - norm).abs() < 1e-12);
            if let Some(prev) = previous {
                let diff: f64 = prev.data().iter().zip(r.data()).map(|(a, b)| (a - b).powi(2)).sum();
                assert!(diff.sqrt() > 1e-3, "positions {} and {p} collapse", p - 1);
            }
            previous = Some(r);
        }
        let (zero, _) = rotated(&q, &q, 0, 0, base);
        assert!(zero.bitwise_eq(&q));
    }
}

#[test]
fn odd_head_dim_is_rejected() {
    let t = Tensor::zeros([2, 5]).unwrap();
    assert!(apply_rope(&t, &t, &[0, 1], 10_000.0).is_err());
}

#[test]
fn raising_the_base_keeps_shapes_and_first_position() {
    let mut cfg = ModelConfig::toy(300);
    cfg.context_limit = 16_384;
    let mut model = ToyVlm::init(cfg, 4).unwrap();
    let ids: Vec<usize> = (0..12).map(|i| (i * 37) % 300).collect();
    let before = model.forward_ids(&ids, &[], &[]).unwrap();
    model.set_rope_base(20_000.0).unwrap();
    let after = model.forward_ids(&ids, &[], &[]).unwrap();
    assert_eq!(before.shape(), after.shape());
    let v = before.shape()[1];
    assert_eq!(
        before.data()[..v].iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
        after.data()[..v].iter().map(|x| x.to_bits()).collect::<Vec<_>>()
    );
    assert_ne!(before.data()[v..], after.data()[v..]);
}
