use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::contexts::ContextSet;
use crate::error::EstimatorError;

use super::coupling::{pseudo_contexts, pseudo_rewards};
use super::ledger::ExplorationLedger;
use super::mixing::{mix_sample, MixWeights};
use super::regression::{DrMixState, MixedRegressionState, RidgeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Explore,
    Exploit,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Explore => "explore",
            Phase::Exploit => "exploit",
        }
    }
}

/// Estimator used to impute the unobserved pseudo-reward rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Imputation {
    #[default]
    ExplorationMixed,
    Ridge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleConfig {
    pub gamma_c: f64,
    pub delta: f64,
    /// Feed unmatched rounds to the exploration-mixed estimator.
    pub mixed_on_unmatched: bool,
    /// Also maintain a DR estimator imputed by ridge.
    pub track_ridge_dr: bool,
    /// Keep update logs for batch-equivalence checks.
    pub log_updates: bool,
}

impl Default for BundleConfig {
    fn default() -> Self {
        Self {
            gamma_c: 1.0,
            delta: 0.1,
            mixed_on_unmatched: true,
            track_ridge_dr: false,
            log_updates: false,
        }
    }
}

/// Everything observed in one round.
#[derive(Debug, Clone, Copy)]
pub struct RoundInput<'a> {
    pub round: usize,
    pub phase: Phase,
    pub basis: usize,
    pub check_arm: usize,
    pub action: usize,
    pub pseudo_action: usize,
    pub matched: bool,
    pub reward: &'a [f64],
    pub weights: MixWeights,
}

/// Ridge, exploration-mixed and DR-mix states with the exploration ledger.
#[derive(Debug, Clone)]
pub struct EstimatorBundle {
    contexts: Arc<ContextSet>,
    config: BundleConfig,
    ledger: ExplorationLedger,
    mixed: MixedRegressionState,
    dr: DrMixState,
    ridge: RidgeState,
    dr_ridge: Option<DrMixState>,
    dr_theta: DMatrix<f64>,
    recycles: usize,
}

impl EstimatorBundle {
    pub fn new(contexts: Arc<ContextSet>, n_objectives: usize, config: BundleConfig) -> Self {
        let d = contexts.dim();
        let mut mixed = MixedRegressionState::new(d, n_objectives);
        let mut dr = DrMixState::new(d, n_objectives);
        let mut ridge = RidgeState::new(d, n_objectives);
        let mut dr_ridge = config
            .track_ridge_dr
            .then(|| DrMixState::new(d, n_objectives));
        if config.log_updates {
            mixed = mixed.with_log();
            dr = dr.with_log();
            ridge = ridge.with_log();
            dr_ridge = dr_ridge.map(DrMixState::with_log);
        }
        Self {
            ledger: ExplorationLedger::new(contexts.n_arms(), d, config.delta, config.gamma_c),
            contexts,
            config,
            mixed,
            dr,
            ridge,
            dr_ridge,
            dr_theta: DMatrix::zeros(d, n_objectives),
            recycles: 0,
        }
    }

    pub fn contexts(&self) -> &Arc<ContextSet> {
        &self.contexts
    }

    pub fn config(&self) -> &BundleConfig {
        &self.config
    }

    /// Record the draw of `check_arm` and apply the exploration rule.
    pub fn schedule(&mut self, t: usize, check_arm: usize) -> Phase {
        self.ledger.record_draw(t, check_arm);
        if self.ledger.decide(t, check_arm) {
            Phase::Explore
        } else {
            Phase::Exploit
        }
    }

    /// Record the draw and use an externally chosen phase. An exploitation
    /// request for an arm without stored samples falls back to exploration.
    pub fn schedule_forced(&mut self, t: usize, check_arm: usize, wanted: Phase) -> Phase {
        self.ledger.record_draw(t, check_arm);
        if wanted == Phase::Exploit && self.ledger.has_sample(check_arm) {
            Phase::Exploit
        } else {
            self.ledger.force_exploration(t, check_arm);
            Phase::Explore
        }
    }

    /// Fold one round into every estimator. Returns the recycled exploration
    /// round on exploitation rounds that mixed.
    pub fn absorb(&mut self, input: &RoundInput<'_>) -> Result<Option<usize>, EstimatorError> {
        let cs = Arc::clone(&self.contexts);
        let x = cs.context(input.action);
        self.ridge.update(x, input.reward);

        let feed_mixed = input.matched || self.config.mixed_on_unmatched;
        let mut recycled_round = None;
        match input.phase {
            Phase::Explore => {
                self.ledger.store_sample(input.round, input.check_arm, input.reward);
                if feed_mixed {
                    self.mixed.update(x, input.reward);
                }
            }
            Phase::Exploit if feed_mixed => {
                let sample = self.ledger.select_recycle_round(input.check_arm)?;
                recycled_round = Some(sample.round);
                let (mx, my) = mix_sample(
                    &cs,
                    input.action,
                    input.reward,
                    input.basis,
                    sample.arm,
                    &sample.reward,
                    input.weights,
                );
                self.recycles += 1;
                self.mixed.update(&mx, &my);
            }
            Phase::Exploit => {}
        }

        if input.matched {
            let xs = pseudo_contexts(&cs, input.action);
            let imputation = self.mixed.solve()?;
            let table = pseudo_rewards(&imputation, &xs, input.pseudo_action, input.reward);
            self.dr.update(&xs, &table);
            self.dr_theta = self.dr.solve()?;
            if let Some(dr_ridge) = self.dr_ridge.as_mut() {
                let imputation = self.ridge.solve()?;
                let table = pseudo_rewards(&imputation, &xs, input.pseudo_action, input.reward);
                dr_ridge.update(&xs, &table);
            }
        }
        Ok(recycled_round)
    }

    /// Current DR-mix estimate (`d x L`), carried over on unmatched rounds.
    pub fn dr_estimate(&self) -> &DMatrix<f64> {
        &self.dr_theta
    }

    pub fn mixed_estimate(&self) -> Result<DMatrix<f64>, EstimatorError> {
        self.mixed.solve()
    }

    pub fn ridge_estimate(&self) -> Result<DMatrix<f64>, EstimatorError> {
        self.ridge.solve()
    }

    pub fn dr_ridge_estimate(&self) -> Option<Result<DMatrix<f64>, EstimatorError>> {
        self.dr_ridge.as_ref().map(DrMixState::solve)
    }

    /// Estimate by imputation choice.
    pub fn dr_estimate_with(&self, imputation: Imputation) -> Result<DMatrix<f64>, EstimatorError> {
        match imputation {
            Imputation::ExplorationMixed => Ok(self.dr_theta.clone()),
            Imputation::Ridge => self
                .dr_ridge_estimate()
                .unwrap_or(Err(EstimatorError::Dimension { expected: 1, found: 0 })),
        }
    }

    pub fn ledger(&self) -> &ExplorationLedger {
        &self.ledger
    }

    pub fn mixed(&self) -> &MixedRegressionState {
        &self.mixed
    }

    pub fn dr(&self) -> &DrMixState {
        &self.dr
    }

    pub fn ridge(&self) -> &RidgeState {
        &self.ridge
    }

    pub fn recycles(&self) -> usize {
        self.recycles
    }

    /// Ledger invariants plus recursive/batch agreement when logging.
    pub fn check_invariants(&self) -> Result<(), String> {
        self.ledger.check_invariants(self.recycles)?;
        let regs = [
            ("exploration-mixed", self.mixed.regression()),
            ("dr-mix", self.dr.regression()),
            ("ridge", self.ridge.regression()),
        ];
        for (name, reg) in regs {
            if let Some(dev) = reg.batch_deviation() {
                if dev > 1e-8 {
                    return Err(format!("{name} state deviates from batch form by {dev}"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_mab_round_trip() {
        let cs = Arc::new(ContextSet::euclidean(2));
        let mut bundle = EstimatorBundle::new(cs, 1, BundleConfig { log_updates: true, ..Default::default() });
        assert_eq!(bundle.schedule(1, 0), Phase::Explore);
        let input = RoundInput {
            round: 1,
            phase: Phase::Explore,
            basis: 0,
            check_arm: 0,
            action: 0,
            pseudo_action: 2,
            matched: true,
            reward: &[1.0],
            weights: MixWeights { fresh: 0.0, recycled: 0.0 },
        };
        assert_eq!(bundle.absorb(&input).unwrap(), None);
        // mixed: (1 + 1/2) theta_0 = 1; DR table rows (2/3, 0, 2*1 - 2/3)
        let mixed = bundle.mixed_estimate().unwrap();
        assert!((mixed[0] - 2.0 / 3.0).abs() < 1e-12);
        let dr = bundle.dr_estimate();
        assert!((dr[0] - (2.0 / 3.0 + 4.0 / 3.0) / 3.0).abs() < 1e-12);
        assert_eq!(dr[1], 0.0);
        bundle.check_invariants().unwrap();
    }

    #[test]
    fn exploit_recycles_and_unmatched_skips_dr() {
        let cs = Arc::new(ContextSet::euclidean(1));
        let mut bundle = EstimatorBundle::new(cs, 1, BundleConfig::default());
        bundle.schedule_forced(1, 0, Phase::Explore);
        let mut input = RoundInput {
            round: 1,
            phase: Phase::Explore,
            basis: 0,
            check_arm: 0,
            action: 0,
            pseudo_action: 0,
            matched: false,
            reward: &[2.0],
            weights: MixWeights { fresh: 1.0, recycled: 1.0 },
        };
        bundle.absorb(&input).unwrap();
        assert_eq!(bundle.dr().matched_rounds(), 0);
        assert_eq!(bundle.schedule_forced(2, 0, Phase::Exploit), Phase::Exploit);
        input.round = 2;
        input.phase = Phase::Exploit;
        assert_eq!(bundle.absorb(&input).unwrap(), Some(1));
        assert_eq!(bundle.recycles(), 1);
        assert_eq!(bundle.dr_estimate()[0], 0.0);
        bundle.check_invariants().unwrap();
    }

    #[test]
    fn forced_exploit_without_sample_falls_back() {
        let cs = Arc::new(ContextSet::euclidean(2));
        let mut bundle = EstimatorBundle::new(cs, 1, BundleConfig::default());
        assert_eq!(bundle.schedule_forced(1, 1, Phase::Exploit), Phase::Explore);
    }
}
