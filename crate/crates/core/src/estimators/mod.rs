//! Estimation pipeline: exploration scheduling and recycling, the
//! exploration-mixed estimator, pseudo-action coupling, pseudo-rewards, the
//! DR-mix estimator and a plain ridge baseline.

mod bundle;
mod coupling;
mod ledger;
mod mixing;
mod regression;

pub use bundle::{BundleConfig, EstimatorBundle, Imputation, Phase, RoundInput};
pub use coupling::{
    draw_pseudo_action, pseudo_action_prob, pseudo_contexts, pseudo_rewards, resample_until_match,
    resampling_budget, MatchOutcome,
};
pub use ledger::{exploration_rule, ExplorationLedger, ExplorationSample};
pub use mixing::{mix_sample, MixWeights};
pub use regression::{DrMixState, MixedRegressionState, Regression, RidgeState};

/// Theory value of the constant in `gamma_t`.
pub const THEORY_GAMMA_C: f64 = 33750.0;

/// `gamma_t = C d^3 ln(2 d t^2 / delta)`.
pub fn gamma_t(dim: usize, t: usize, delta: f64, c: f64) -> f64 {
    let d = dim as f64;
    let t = t as f64;
    c * d.powi(3) * (2.0 * d * t * t / delta).ln()
}

/// First round `t >= 1` with `t >= gamma_t`.
pub fn warmup_threshold(dim: usize, delta: f64, c: f64) -> usize {
    let gap = |t: usize| t as f64 - gamma_t(dim, t, delta, c);
    if gap(1) >= 0.0 {
        return 1;
    }
    // t - gamma_t decreases up to t = 2 C d^3 and increases afterwards, so the
    // first crossing lies beyond that point
    let mut lo = ((2.0 * c * (dim as f64).powi(3)).ceil() as usize).max(1);
    if gap(lo) >= 0.0 {
        return lo;
    }
    let mut hi = lo.saturating_mul(2).max(2);
    while gap(hi) < 0.0 {
        lo = hi;
        hi = hi.saturating_mul(2);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if gap(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_examples() {
        assert!((gamma_t(1, 1, 1.0, 2.0) - 2.0 * 2f64.ln()).abs() < 1e-12);
        let g = gamma_t(3, 100, 0.1, 1.0);
        assert!((g - 27.0 * 6e5f64.ln()).abs() < 1e-9);
        assert!((g - 359.2).abs() < 0.05);
        assert_eq!(THEORY_GAMMA_C, 6.0 * 75.0 * 75.0);
    }

    #[test]
    fn warmup_is_first_crossing() {
        for (d, delta, c) in [(3, 0.1, 1.0), (1, 0.5, 0.1), (16, 0.1, 0.01), (2, 0.05, 1.0)] {
            let t = warmup_threshold(d, delta, c);
            assert!(t as f64 >= gamma_t(d, t, delta, c));
            // brute force from 1 up to t
            let first = (1..=t).find(|&s| s as f64 >= gamma_t(d, s, delta, c)).unwrap();
            assert_eq!(first, t);
        }
    }
}
