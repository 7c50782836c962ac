//! Estimation-only simulations: a fixed exploitation policy feeding the
//! estimator bundle, used by the consistency, density and imputation
//! experiments.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::contexts::ContextSet;
use crate::environments::RewardSource;
use crate::error::{AlgorithmError, EstimatorError};
use crate::estimators::{
    resample_until_match, BundleConfig, EstimatorBundle, Imputation, MixWeights, Phase, RoundInput,
};
use crate::rng::RngStreams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Ridge,
    ExplorationMixed,
    DrMix,
    DrRidge,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::Ridge,
        EstimatorKind::ExplorationMixed,
        EstimatorKind::DrMix,
        EstimatorKind::DrRidge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Ridge => "ridge",
            EstimatorKind::ExplorationMixed => "exploration-mixed",
            EstimatorKind::DrMix => "dr-mix",
            EstimatorKind::DrRidge => "dr-ridge",
        }
    }

    /// Current `d x L` estimate of this kind held by `bundle`.
    pub fn estimate(self, bundle: &EstimatorBundle) -> Result<DMatrix<f64>, EstimatorError> {
        match self {
            EstimatorKind::Ridge => bundle.ridge_estimate(),
            EstimatorKind::ExplorationMixed => bundle.mixed_estimate(),
            EstimatorKind::DrMix => Ok(bundle.dr_estimate().clone()),
            EstimatorKind::DrRidge => bundle.dr_estimate_with(Imputation::Ridge),
        }
    }
}

/// How rounds are split between exploration and exploitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// Explore the first `explore_rounds` rounds, exploit afterwards.
    Forced { explore_rounds: usize },
    /// The exploration rule of the ledger.
    Rule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationProtocol {
    pub horizon: usize,
    pub schedule: Schedule,
    /// Arm played on every exploitation round.
    pub exploited_arm: usize,
    pub delta: f64,
    pub gamma_c: f64,
    pub mixed_on_unmatched: bool,
    pub track_ridge_dr: bool,
    pub log_updates: bool,
}

/// Run the protocol, calling `observer(t, bundle)` after every round.
pub fn run_estimation<E, F>(
    env: &E,
    contexts: &Arc<ContextSet>,
    protocol: &EstimationProtocol,
    mut streams: RngStreams,
    mut observer: F,
) -> Result<EstimatorBundle, AlgorithmError>
where
    E: RewardSource,
    F: FnMut(usize, &EstimatorBundle) -> Result<(), EstimatorError>,
{
    if protocol.exploited_arm >= contexts.n_arms() || env.n_arms() != contexts.n_arms() {
        return Err(AlgorithmError::InvalidParameter("exploited arm or arm count mismatch".into()));
    }
    let dim = contexts.dim();
    let mut bundle = EstimatorBundle::new(
        Arc::clone(contexts),
        env.n_objectives(),
        BundleConfig {
            gamma_c: protocol.gamma_c,
            delta: protocol.delta,
            mixed_on_unmatched: protocol.mixed_on_unmatched,
            track_ridge_dr: protocol.track_ridge_dr,
            log_updates: protocol.log_updates,
        },
    );
    for t in 1..=protocol.horizon {
        let basis = streams.algorithm.random_range(0..dim);
        let check_arm = contexts.sample_basis_action(basis, &mut streams.algorithm);
        let phase = match protocol.schedule {
            Schedule::Forced { explore_rounds } => {
                let wanted = if t <= explore_rounds { Phase::Explore } else { Phase::Exploit };
                bundle.schedule_forced(t, check_arm, wanted)
            }
            Schedule::Rule => bundle.schedule(t, check_arm),
        };
        let (action, weights) = match phase {
            Phase::Explore => (check_arm, MixWeights { fresh: 0.0, recycled: 0.0 }),
            Phase::Exploit => (protocol.exploited_arm, MixWeights::draw(&mut streams.weights)),
        };
        let outcome = resample_until_match(|_| action, dim, t, protocol.delta, &mut streams.resampling);
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
        observer(t, &bundle)?;
    }
    Ok(bundle)
}

/// Per-arm reward errors `x_k^T theta_hat - y_k` (rows arms, columns objectives).
pub fn reward_errors(theta_hat: &DMatrix<f64>, contexts: &ContextSet, means: &[Vec<f64>]) -> Vec<Vec<f64>> {
    contexts
        .contexts()
        .iter()
        .zip(means)
        .map(|(x, y)| {
            let predicted = theta_hat.transpose() * x;
            predicted.iter().zip(y).map(|(p, m)| p - m).collect()
        })
        .collect()
}

/// Error on the exploited arm and the joint l2 error on every other arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorPoint {
    pub exploited: f64,
    pub unexploited: f64,
}

impl ErrorPoint {
    pub fn from_errors(errors: &[Vec<f64>], exploited_arm: usize) -> Self {
        let sq = |row: &Vec<f64>| row.iter().map(|e| e * e).sum::<f64>();
        let exploited = sq(&errors[exploited_arm]).sqrt();
        let unexploited = errors
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != exploited_arm)
            .map(|(_, row)| sq(row))
            .sum::<f64>()
            .sqrt();
        Self { exploited, unexploited }
    }
}

/// One replication's error curves and checkpoint errors.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationTrace {
    pub kinds: Vec<EstimatorKind>,
    /// `curves[kind][t - 1]`.
    pub curves: Vec<Vec<ErrorPoint>>,
    /// `(n, per-kind per-arm reward errors)` at each checkpoint.
    pub checkpoints: Vec<(usize, Vec<Vec<Vec<f64>>>)>,
}

/// Run one replication and record the errors of `kinds`.
pub fn trace_estimators<E: RewardSource>(
    env: &E,
    contexts: &Arc<ContextSet>,
    protocol: &EstimationProtocol,
    kinds: &[EstimatorKind],
    checkpoints: &[usize],
    streams: RngStreams,
) -> Result<EstimationTrace, AlgorithmError> {
    let mut protocol = protocol.clone();
    protocol.track_ridge_dr |= kinds.contains(&EstimatorKind::DrRidge);
    let mut curves = vec![Vec::with_capacity(protocol.horizon); kinds.len()];
    let mut snapshots = Vec::new();
    run_estimation(env, contexts, &protocol, streams, |t, bundle| {
        let mut at_checkpoint = Vec::new();
        for (curve, kind) in curves.iter_mut().zip(kinds) {
            let errors = reward_errors(&kind.estimate(bundle)?, contexts, env.means());
            curve.push(ErrorPoint::from_errors(&errors, protocol.exploited_arm));
            if checkpoints.contains(&t) {
                at_checkpoint.push(errors);
            }
        }
        if checkpoints.contains(&t) {
            snapshots.push((t, at_checkpoint));
        }
        Ok(())
    })?;
    Ok(EstimationTrace {
        kinds: kinds.to_vec(),
        curves,
        checkpoints: snapshots,
    })
}
