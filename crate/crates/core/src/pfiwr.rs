//! Pareto front identification with regret minimization (PFIwR).

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::contexts::ContextSet;
use crate::environments::RewardSource;
use crate::error::AlgorithmError;
use crate::estimators::{
    resample_until_match, warmup_threshold, BundleConfig, EstimatorBundle, MixWeights, Phase,
    RoundInput,
};
use crate::pareto::{big_m_gap_unchecked, dominated_by, gap_profile, m_gap_unchecked, GapProfile};
use crate::rng::RngStreams;

#[derive(Debug, Clone, PartialEq)]
pub struct PfiConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Noise scale assumed by the confidence bounds.
    pub sigma: f64,
    /// Parameter-norm bound assumed by the confidence bounds.
    pub theta_max: f64,
    pub gamma_c: f64,
    /// Confidence for the resampling budget; defaults to `delta`.
    pub resample_delta: Option<f64>,
    pub max_rounds: usize,
    pub mixed_on_unmatched: bool,
    /// Keep the per-round log in the result.
    pub keep_history: bool,
    /// Window length of the regret trace.
    pub curve_stride: usize,
    /// Keep estimator update logs for batch-equivalence checks.
    pub log_updates: bool,
}

impl Default for PfiConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            delta: 0.1,
            sigma: 0.1,
            theta_max: 1.0,
            gamma_c: 1.0,
            resample_delta: None,
            max_rounds: 100_000,
            mixed_on_unmatched: true,
            keep_history: true,
            curve_stride: 1,
            log_updates: false,
        }
    }
}

impl PfiConfig {
    pub fn validate(&self) -> Result<(), AlgorithmError> {
        let bad = |what: &str| Err(AlgorithmError::InvalidParameter(what.to_string()));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.sigma >= 0.0) || !(self.theta_max >= 0.0) {
            return bad("sigma and theta_max must be nonnegative");
        }
        if !(self.gamma_c > 0.0) {
            return bad("gamma_c must be positive");
        }
        if self.resample_delta.is_some_and(|d| !(d > 0.0)) {
            return bad("resample_delta must be positive");
        }
        if self.max_rounds == 0 || self.curve_stride == 0 {
            return bad("max_rounds and curve_stride must be at least 1");
        }
        Ok(())
    }

    /// First round after which exploitation can dominate the schedule.
    pub fn warmup(&self, dim: usize) -> usize {
        warmup_threshold(dim, self.delta, self.gamma_c)
    }

    pub(crate) fn bound_params(&self, dim: usize, n_objectives: usize) -> BoundParams {
        BoundParams {
            theta_max: self.theta_max,
            sigma: self.sigma,
            n_objectives,
            dim,
            delta: self.delta,
        }
    }
}

/// Constants entering the confidence radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub theta_max: f64,
    pub sigma: f64,
    pub n_objectives: usize,
    pub dim: usize,
    pub delta: f64,
}

impl BoundParams {
    /// `beta_{k,t}` given `||x_k||_{F_t^{-1}}`, the round and the size of the
    /// undetermined set.
    pub fn beta(&self, design_norm: f64, t: usize, n_undetermined: usize) -> f64 {
        let l = self.n_objectives as f64;
        let d = self.dim as f64;
        let t = t as f64;
        let width = if n_undetermined > self.dim {
            self.sigma * (d * (7.0 * l * t / self.delta).ln()).sqrt()
        } else {
            3.0 * self.sigma * (28.0 * l * d * t * t / self.delta).ln().sqrt()
        };
        3.0 * design_norm * (self.theta_max + width)
    }
}

/// Confidence radius of `arm` at round `t`.
pub fn confidence_bound(
    contexts: &ContextSet,
    arm: usize,
    t: usize,
    n_undetermined: usize,
    params: &BoundParams,
) -> f64 {
    params.beta(contexts.design_norm(arm, t), t, n_undetermined)
}

/// Estimated gap tables indexed by arm; entries for arms outside the
/// evaluated set are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GapTables {
    /// `m_hat(k, k')`.
    pub m: DMatrix<f64>,
    /// `M_hat^{2 eps}(k, k')`.
    pub big_m: DMatrix<f64>,
}

/// Pairwise `m_hat` and `M_hat^{2 eps}` over `arms` from per-arm estimates.
pub fn gap_estimates(estimates: &[Vec<f64>], arms: &[usize], epsilon: f64) -> GapTables {
    let k = estimates.len();
    let mut m = DMatrix::from_element(k, k, f64::NAN);
    let mut big_m = DMatrix::from_element(k, k, f64::NAN);
    for &a in arms {
        for &b in arms {
            m[(a, b)] = m_gap_unchecked(&estimates[a], &estimates[b]);
            big_m[(a, b)] = big_m_gap_unchecked(&estimates[a], &estimates[b], 2.0 * epsilon);
        }
    }
    GapTables { m, big_m }
}

/// One elimination step: returns `(C_t, P_t^(1))`.
pub fn eliminate(
    undetermined: &[usize],
    accepted: &[usize],
    tables: &GapTables,
    betas: &[f64],
) -> (Vec<usize>, Vec<usize>) {
    let kept: Vec<usize> = undetermined
        .iter()
        .copied()
        .filter(|&k| {
            undetermined
                .iter()
                .chain(accepted)
                .all(|&j| tables.m[(k, j)] <= betas[k] + betas[j])
        })
        .collect();
    let newly: Vec<usize> = kept
        .iter()
        .copied()
        .filter(|&k| {
            kept.iter()
                .chain(accepted)
                .filter(|&&j| j != k)
                .all(|&j| tables.big_m[(k, j)] >= betas[k] + betas[j])
        })
        .collect();
    (kept, newly)
}

/// Arms of `set` whose estimate is not strictly dominated within `set`.
pub fn non_dominated(estimates: &[Vec<f64>], set: &[usize]) -> Vec<usize> {
    set.iter()
        .copied()
        .filter(|&k| !set.iter().any(|&j| dominated_by(&estimates[k], &estimates[j])))
        .collect()
}

/// One row of the round log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub round: usize,
    pub phase: Phase,
    #[serde(rename = "i_t")]
    pub basis: usize,
    pub check_arm: usize,
    pub action: usize,
    pub matched: bool,
    pub attempts: usize,
    pub regret: f64,
    pub n_undetermined: usize,
    pub n_accepted: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Terminated,
    MaxRoundsExceeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Accepted arms, sorted.
    pub output: Vec<usize>,
    /// Rounds played.
    pub tau: usize,
    pub cum_regret: f64,
    pub status: RunStatus,
    /// Regret summed over consecutive windows of `curve_stride` rounds up to
    /// `max_rounds`; windows after termination are zero.
    pub regret_windows: Vec<f64>,
    pub history: Vec<RunRecord>,
}

impl RunResult {
    pub(crate) fn new(max_rounds: usize, stride: usize) -> Self {
        Self {
            output: Vec::new(),
            tau: 0,
            cum_regret: 0.0,
            status: RunStatus::MaxRoundsExceeded,
            regret_windows: vec![0.0; max_rounds.div_ceil(stride)],
            history: Vec::new(),
        }
    }

    pub(crate) fn add_regret(&mut self, round: usize, stride: usize, regret: f64) {
        self.cum_regret += regret;
        self.regret_windows[(round - 1) / stride] += regret;
    }

    pub fn terminated(&self) -> bool {
        self.status == RunStatus::Terminated
    }

    pub fn success(&self, profile: &GapProfile, epsilon: f64) -> bool {
        self.terminated() && crate::pareto::success_check(&self.output, profile, epsilon)
    }

    /// Write the round log as CSV.
    pub fn write_round_log<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(writer);
        if self.history.is_empty() {
            out.write_record([
                "round",
                "phase",
                "i_t",
                "check_arm",
                "action",
                "matched",
                "attempts",
                "regret",
                "n_undetermined",
                "n_accepted",
            ])?;
        }
        for record in &self.history {
            out.serialize(record)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// State exposed to an observer after every round.
#[derive(Debug)]
pub struct RoundView<'a> {
    pub round: usize,
    pub phase: Phase,
    pub matched: bool,
    pub action: usize,
    /// Current reward estimates of every arm.
    pub estimates: &'a [Vec<f64>],
    /// Confidence radii of every arm from the last matched round.
    pub betas: &'a [f64],
    /// Undetermined set before and after this round.
    pub previous_undetermined: &'a [usize],
    pub undetermined: &'a [usize],
    pub accepted: &'a [usize],
    pub bundle: &'a EstimatorBundle,
}

fn estimates_from(theta: &DMatrix<f64>, contexts: &ContextSet) -> Vec<Vec<f64>> {
    contexts
        .contexts()
        .iter()
        .map(|x| (theta.transpose() * x).iter().copied().collect())
        .collect()
}

/// Run PFIwR on `env` until the undetermined set empties or the round cap.
pub fn run<E: RewardSource>(
    env: &E,
    contexts: Arc<ContextSet>,
    config: &PfiConfig,
    streams: RngStreams,
) -> Result<RunResult, AlgorithmError> {
    run_observed(env, contexts, config, streams, |_| {})
}

/// [`run`] with a callback invoked after every round.
pub fn run_observed<E, F>(
    env: &E,
    contexts: Arc<ContextSet>,
    config: &PfiConfig,
    mut streams: RngStreams,
    mut observer: F,
) -> Result<RunResult, AlgorithmError>
where
    E: RewardSource,
    F: FnMut(&RoundView<'_>),
{
    config.validate()?;
    let n_arms = contexts.n_arms();
    if env.n_arms() != n_arms {
        return Err(AlgorithmError::InvalidParameter(format!(
            "environment has {} arms but {n_arms} contexts",
            env.n_arms()
        )));
    }
    let dim = contexts.dim();
    let n_obj = env.n_objectives();
    let truth = gap_profile(env.means())
        .map_err(|e| AlgorithmError::InvalidParameter(e.to_string()))?;
    let params = config.bound_params(dim, n_obj);
    let resample_delta = config.resample_delta.unwrap_or(config.delta);
    let mut bundle = EstimatorBundle::new(
        Arc::clone(&contexts),
        n_obj,
        BundleConfig {
            gamma_c: config.gamma_c,
            delta: config.delta,
            mixed_on_unmatched: config.mixed_on_unmatched,
            track_ridge_dr: false,
            log_updates: config.log_updates,
        },
    );

    let mut undetermined: Vec<usize> = (0..n_arms).collect();
    let mut accepted: Vec<usize> = Vec::new();
    let mut estimates = vec![vec![0.0; n_obj]; n_arms];
    let mut betas = vec![f64::INFINITY; n_arms];
    let mut result = RunResult::new(config.max_rounds, config.curve_stride);

    for t in 1..=config.max_rounds {
        let basis = streams.algorithm.random_range(0..dim);
        let check_arm = contexts.sample_basis_action(basis, &mut streams.algorithm);
        let phase = bundle.schedule(t, check_arm);
        let weights = match phase {
            Phase::Exploit => MixWeights::draw(&mut streams.weights),
            Phase::Explore => MixWeights {
                fresh: 0.0,
                recycled: 0.0,
            },
        };
        let outcome = match phase {
            Phase::Explore => {
                resample_until_match(|_| check_arm, dim, t, resample_delta, &mut streams.resampling)
            }
            Phase::Exploit => {
                let mut candidates = non_dominated(&estimates, &undetermined);
                if candidates.is_empty() {
                    candidates = undetermined.clone();
                }
                resample_until_match(
                    |rng| candidates[rng.random_range(0..candidates.len())],
                    dim,
                    t,
                    resample_delta,
                    &mut streams.resampling,
                )
            }
        };
        let action = outcome.action;
        let reward = env.pull(action, &mut streams.environment);
        bundle.absorb(&RoundInput {
            round: t,
            phase,
            basis,
            check_arm,
            action,
            pseudo_action: outcome.pseudo_action,
            matched: outcome.matched,
            reward: &reward,
            weights,
        })?;

        let previous = undetermined.clone();
        if outcome.matched {
            estimates = estimates_from(bundle.dr_estimate(), &contexts);
            for (k, beta) in betas.iter_mut().enumerate() {
                *beta = confidence_bound(&contexts, k, t, previous.len(), &params);
            }
            let mut pool = undetermined.clone();
            pool.extend_from_slice(&accepted);
            let tables = gap_estimates(&estimates, &pool, config.epsilon);
            let (kept, newly) = eliminate(&undetermined, &accepted, &tables, &betas);
            accepted.extend_from_slice(&newly);
            accepted.sort_unstable();
            undetermined = kept.into_iter().filter(|k| !newly.contains(k)).collect();
        }

        let regret = truth.delta_star[action];
        result.add_regret(t, config.curve_stride, regret);
        if config.keep_history {
            result.history.push(RunRecord {
                round: t,
                phase,
                basis,
                check_arm,
                action,
                matched: outcome.matched,
                attempts: outcome.attempts,
                regret,
                n_undetermined: undetermined.len(),
                n_accepted: accepted.len(),
            });
        }
        observer(&RoundView {
            round: t,
            phase,
            matched: outcome.matched,
            action,
            estimates: &estimates,
            betas: &betas,
            previous_undetermined: &previous,
            undetermined: &undetermined,
            accepted: &accepted,
            bundle: &bundle,
        });
        result.tau = t;
        if undetermined.is_empty() {
            result.status = RunStatus::Terminated;
            break;
        }
    }
    result.output = accepted;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::mab_environment;

    fn params(dim: usize) -> BoundParams {
        BoundParams {
            theta_max: 3f64.sqrt(),
            sigma: 0.1,
            n_objectives: 1,
            dim,
            delta: 0.1,
        }
    }

    #[test]
    fn bound_example() {
        let cs = ContextSet::euclidean(3);
        let beta = confidence_bound(&cs, 0, 100, 3, &params(3));
        let expected =
            3.0 / 101f64.sqrt() * (3f64.sqrt() + 0.3 * (28.0 * 3.0 * 1e4 / 0.1f64).ln().sqrt());
        assert!((beta - expected).abs() < 1e-12);
        assert!((beta - 0.875).abs() < 1e-3);
        let wide = confidence_bound(&cs, 0, 100, 4, &params(3));
        let expected = 3.0 / 101f64.sqrt() * (3f64.sqrt() + 0.1 * (3.0 * (700.0 / 0.1f64).ln()).sqrt());
        assert!((wide - expected).abs() < 1e-12);
        let noiseless = BoundParams { sigma: 0.0, ..params(3) };
        assert!((noiseless.beta(0.2, 10, 1) - 3.0 * 3f64.sqrt() * 0.2).abs() < 1e-12);
    }

    #[test]
    fn gap_tables_match_closed_forms() {
        let y = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]];
        let tables = gap_estimates(&y, &[0, 1, 2], 0.0);
        assert_eq!(tables.m[(2, 0)], 0.0);
        assert_eq!(tables.m[(2, 2)], 0.0);
        assert_eq!(tables.big_m[(0, 1)], 1.0);
        let shifted = gap_estimates(&y, &[0, 1], 0.05);
        assert!((shifted.big_m[(0, 0)] - 0.1).abs() < 1e-12);
        assert!(shifted.m[(2, 0)].is_nan());
    }

    #[test]
    fn elimination_extremes() {
        let y = vec![vec![1.0], vec![-1.0], vec![-1.0]];
        let all = [0, 1, 2];
        let tables = gap_estimates(&y, &all, 0.5);
        let (kept, newly) = eliminate(&all, &[], &tables, &[1e9; 3]);
        assert_eq!(kept, vec![0, 1, 2]);
        assert!(newly.is_empty());
        let (kept, newly) = eliminate(&all, &[], &tables, &[0.0; 3]);
        assert_eq!(kept, vec![0]);
        assert_eq!(newly, vec![0]);
    }

    #[test]
    fn noiseless_mab_terminates_with_front() {
        let env = mab_environment(&[vec![1.0], vec![-1.0], vec![-1.0]], 0.0).unwrap();
        let config = PfiConfig {
            epsilon: 0.5,
            sigma: 0.0,
            theta_max: 1.0,
            max_rounds: 5000,
            ..Default::default()
        };
        let result = run(&env, Arc::clone(env.contexts()), &config, RngStreams::new(3, 0)).unwrap();
        assert!(result.terminated());
        assert_eq!(result.output, vec![0]);
        let logged: f64 = result.history.iter().map(|r| r.regret).sum();
        assert!((logged - result.cum_regret).abs() < 1e-9);
    }

    #[test]
    fn single_arm_terminates_immediately() {
        let env = mab_environment(&[vec![0.3, 0.1]], 0.1).unwrap();
        let result = run(
            &env,
            Arc::clone(env.contexts()),
            &PfiConfig::default(),
            RngStreams::new(1, 0),
        )
        .unwrap();
        assert!(result.terminated());
        assert_eq!(result.output, vec![0]);
        assert_eq!(result.tau, 1);
    }
}
