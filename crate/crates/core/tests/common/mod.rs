#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;

/// Random `d x K` context matrix with column norms in `[0.3, 1]`.
pub fn random_contexts<R: Rng>(dim: usize, n_arms: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m: DMatrix<f64> = DMatrix::from_fn(dim, n_arms, |_, _| rng.random_range(-1.0..1.0));
    for mut col in m.column_iter_mut() {
        let norm: f64 = col.norm().max(1e-12);
        let target = rng.random_range(0.3..1.0);
        col *= target / norm;
    }
    m
}

/// Smallest `c >= 0` with `pred(c)` for a predicate monotone in `c`, by bisection.
pub fn bisect_min(pred: impl Fn(f64) -> bool, hi: f64) -> f64 {
    if pred(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Lift of `y_k` until it escapes `y_j`'s (weak) domination in some objective.
pub fn oracle_m(y_k: &[f64], y_j: &[f64]) -> f64 {
    bisect_min(|c| y_k.iter().zip(y_j).any(|(a, b)| a + c > *b), 100.0)
}

/// Lift of `y_j` until it weakly dominates `y_k`.
pub fn oracle_big_m(y_k: &[f64], y_j: &[f64]) -> f64 {
    bisect_min(|c| y_k.iter().zip(y_j).all(|(a, b)| *a <= b + c), 100.0)
}

/// Front by exhaustive pairwise comparison.
pub fn oracle_front(means: &[Vec<f64>]) -> Vec<usize> {
    (0..means.len())
        .filter(|&k| {
            !means.iter().any(|other| {
                other.iter().zip(&means[k]).all(|(o, m)| o >= m) && other.iter().zip(&means[k]).any(|(o, m)| o > m)
            })
        })
        .collect()
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}
