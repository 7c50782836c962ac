//! Successive-elimination Pareto front identification for multi-armed
//! bandits (the MultiPFI baseline).
//!
//! Arms are pulled round-robin over the active set. After every epoch each
//! undetermined arm is eliminated when some arm dominates it beyond the
//! confidence radii, or accepted when it is `2 eps`-separated from every other
//! candidate. An accepted arm keeps being pulled while some undetermined arm
//! might still be dominated by it.

use std::sync::Arc;

use crate::contexts::ContextSet;
use crate::environments::RewardSource;
use crate::error::AlgorithmError;
use crate::estimators::Phase;
use crate::pareto::{big_m_gap_unchecked, gap_profile};
use crate::pfiwr::{eliminate, gap_estimates, RunRecord, RunResult, RunStatus};
use crate::rng::RngStreams;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiPfiConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Multiplier on the confidence radius.
    pub radius_scale: f64,
    pub max_rounds: usize,
    pub keep_history: bool,
    pub curve_stride: usize,
}

impl Default for MultiPfiConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            delta: 0.1,
            radius_scale: 1.0,
            max_rounds: 100_000,
            keep_history: true,
            curve_stride: 1,
        }
    }
}

impl MultiPfiConfig {
    pub fn validate(&self) -> Result<(), AlgorithmError> {
        let bad = |what: &str| Err(AlgorithmError::InvalidParameter(what.to_string()));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.radius_scale >= 0.0) {
            return bad("radius_scale must be nonnegative");
        }
        if self.max_rounds == 0 || self.curve_stride == 0 {
            return bad("max_rounds and curve_stride must be at least 1");
        }
        Ok(())
    }
}

/// Per-arm pull counts and running mean reward vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct MabEstimate {
    pub counts: Vec<usize>,
    pub means: Vec<Vec<f64>>,
}

impl MabEstimate {
    pub fn new(n_arms: usize, n_objectives: usize) -> Self {
        Self {
            counts: vec![0; n_arms],
            means: vec![vec![0.0; n_objectives]; n_arms],
        }
    }

    pub fn observe(&mut self, arm: usize, reward: &[f64]) {
        self.counts[arm] += 1;
        let n = self.counts[arm] as f64;
        for (m, y) in self.means[arm].iter_mut().zip(reward) {
            *m += (y - *m) / n;
        }
    }
}

/// `sqrt((2 / n) ln(4 L K n^2 / delta))`; infinite before the first pull.
pub fn hoeffding_radius(n: usize, n_objectives: usize, n_arms: usize, delta: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    let n = n as f64;
    let inner = 4.0 * n_objectives as f64 * n_arms as f64 * n * n / delta;
    (2.0 / n * inner.ln()).sqrt()
}

/// Run MultiPFI on a multi-armed environment.
pub fn run_multipfi<E: RewardSource>(
    env: &E,
    contexts: &Arc<ContextSet>,
    config: &MultiPfiConfig,
    streams: RngStreams,
) -> Result<RunResult, AlgorithmError> {
    run_multipfi_with(env, contexts, config, streams, |n, l, k, d| hoeffding_radius(n, l, k, d))
}

/// [`run_multipfi`] with a custom radius `(n_k, L, K, delta) -> beta`.
pub fn run_multipfi_with<E, F>(
    env: &E,
    contexts: &Arc<ContextSet>,
    config: &MultiPfiConfig,
    mut streams: RngStreams,
    radius: F,
) -> Result<RunResult, AlgorithmError>
where
    E: RewardSource,
    F: Fn(usize, usize, usize, f64) -> f64,
{
    config.validate()?;
    if !contexts.is_euclidean_basis() || contexts.n_arms() != env.n_arms() {
        return Err(AlgorithmError::NotMab);
    }
    let n_arms = env.n_arms();
    let n_obj = env.n_objectives();
    let truth = gap_profile(env.means())
        .map_err(|e| AlgorithmError::InvalidParameter(e.to_string()))?;

    let mut estimate = MabEstimate::new(n_arms, n_obj);
    let mut undetermined: Vec<usize> = (0..n_arms).collect();
    let mut accepted: Vec<usize> = Vec::new();
    let mut active: Vec<usize> = undetermined.clone();
    let mut result = RunResult::new(config.max_rounds, config.curve_stride);
    let mut t = 0;

    'epochs: while !undetermined.is_empty() {
        for &arm in &active {
            if t == config.max_rounds {
                break 'epochs;
            }
            t += 1;
            let reward = env.pull(arm, &mut streams.environment);
            estimate.observe(arm, &reward);
            let regret = truth.delta_star[arm];
            result.add_regret(t, config.curve_stride, regret);
            if config.keep_history {
                result.history.push(RunRecord {
                    round: t,
                    phase: Phase::Explore,
                    basis: arm,
                    check_arm: arm,
                    action: arm,
                    matched: true,
                    attempts: 1,
                    regret,
                    n_undetermined: undetermined.len(),
                    n_accepted: accepted.len(),
                });
            }
        }

        let betas: Vec<f64> = estimate
            .counts
            .iter()
            .map(|&n| config.radius_scale * radius(n, n_obj, n_arms, config.delta))
            .collect();
        let mut pool = undetermined.clone();
        pool.extend_from_slice(&accepted);
        let tables = gap_estimates(&estimate.means, &pool, config.epsilon);
        let (kept, newly) = eliminate(&undetermined, &accepted, &tables, &betas);
        accepted.extend_from_slice(&newly);
        accepted.sort_unstable();
        undetermined = kept.into_iter().filter(|k| !newly.contains(k)).collect();

        active = undetermined.clone();
        for &k in &accepted {
            let still_dominating = undetermined.iter().any(|&j| {
                big_m_gap_unchecked(&estimate.means[j], &estimate.means[k], 0.0) < betas[j] + betas[k]
            });
            if still_dominating {
                active.push(k);
            }
        }
        active.sort_unstable();
        if let Some(last) = result.history.last_mut() {
            last.n_undetermined = undetermined.len();
            last.n_accepted = accepted.len();
        }
    }

    result.tau = t;
    if undetermined.is_empty() {
        result.status = RunStatus::Terminated;
    }
    result.output = accepted;
    Ok(result)
}
