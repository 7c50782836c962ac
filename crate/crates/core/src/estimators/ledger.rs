use crate::error::EstimatorError;

use super::gamma_t;

/// A reward observed in an exploration round, kept for recycling.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationSample {
    pub round: usize,
    pub arm: usize,
    pub reward: Vec<f64>,
    /// Number of exploitation rounds that recycled this sample.
    pub reuse: usize,
}

/// `explored <= ratio * draws`: the exploration-set membership test, with
/// `explored` counted before round `t` is inserted.
pub fn exploration_rule(explored: usize, draws: usize, ratio: f64) -> bool {
    explored as f64 <= ratio * draws as f64
}

/// Exploration-set bookkeeping: which rounds explored, per-arm draw and
/// exploration counts, and the stored samples with their reuse counters.
#[derive(Debug, Clone)]
pub struct ExplorationLedger {
    dim: usize,
    delta: f64,
    gamma_c: f64,
    rounds: Vec<usize>,
    explored: Vec<usize>,
    draws: Vec<usize>,
    last_draw: Vec<usize>,
    // (round, draws) at the latest exploration of each arm
    last_explore: Vec<(usize, usize)>,
    samples: Vec<Vec<ExplorationSample>>,
    forced: bool,
}

impl ExplorationLedger {
    pub fn new(n_arms: usize, dim: usize, delta: f64, gamma_c: f64) -> Self {
        Self {
            dim,
            delta,
            gamma_c,
            rounds: Vec::new(),
            explored: vec![0; n_arms],
            draws: vec![0; n_arms],
            last_draw: vec![0; n_arms],
            last_explore: vec![(0, 0); n_arms],
            samples: vec![Vec::new(); n_arms],
            forced: false,
        }
    }

    pub fn gamma(&self, t: usize) -> f64 {
        gamma_t(self.dim, t, self.delta, self.gamma_c)
    }

    pub fn gamma_c(&self) -> f64 {
        self.gamma_c
    }

    /// Count the draw of `arm` as the check action of round `t`.
    pub fn record_draw(&mut self, t: usize, arm: usize) {
        self.draws[arm] += 1;
        self.last_draw[arm] = t;
    }

    /// Decide whether round `t` explores. Call after [`Self::record_draw`] for
    /// the same round; a passing test inserts `t` into the exploration set.
    pub fn decide(&mut self, t: usize, arm: usize) -> bool {
        let ratio = self.gamma(t) / t as f64;
        let explore = exploration_rule(self.explored[arm], self.draws[arm], ratio);
        if explore {
            self.insert(t, arm);
        }
        explore
    }

    /// Insert `t` regardless of the rule (externally scheduled exploration).
    pub fn force_exploration(&mut self, t: usize, arm: usize) {
        self.forced = true;
        self.insert(t, arm);
    }

    fn insert(&mut self, t: usize, arm: usize) {
        self.rounds.push(t);
        self.explored[arm] += 1;
        self.last_explore[arm] = (t, self.draws[arm]);
    }

    /// Store the reward observed in exploration round `t`.
    pub fn store_sample(&mut self, t: usize, arm: usize, reward: &[f64]) {
        debug_assert_eq!(self.rounds.last(), Some(&t), "round {t} is not an exploration round");
        self.samples[arm].push(ExplorationSample {
            round: t,
            arm,
            reward: reward.to_vec(),
            reuse: 0,
        });
    }

    /// Least-reused stored sample of `arm` (earliest round on ties); its reuse
    /// counter is incremented.
    pub fn select_recycle_round(&mut self, arm: usize) -> Result<&ExplorationSample, EstimatorError> {
        let pool = &mut self.samples[arm];
        let mut best: Option<usize> = None;
        for (idx, s) in pool.iter().enumerate() {
            if best.is_none_or(|b| s.reuse < pool[b].reuse) {
                best = Some(idx);
            }
        }
        let idx = best.ok_or(EstimatorError::NoExplorationSample(arm))?;
        pool[idx].reuse += 1;
        Ok(&pool[idx])
    }

    pub fn has_sample(&self, arm: usize) -> bool {
        !self.samples[arm].is_empty()
    }

    pub fn exploration_rounds(&self) -> &[usize] {
        &self.rounds
    }

    pub fn explored_count(&self, arm: usize) -> usize {
        self.explored[arm]
    }

    pub fn draw_count(&self, arm: usize) -> usize {
        self.draws[arm]
    }

    pub fn samples(&self, arm: usize) -> &[ExplorationSample] {
        &self.samples[arm]
    }

    /// Check the ledger invariants:
    ///
    /// * every drawn arm has been explored at least once;
    /// * reuse counters sum to the number of recycles;
    /// * for rule-driven ledgers, `explored[k] <= (gamma_s / s) draws_s[k] + 1`
    ///   at the latest exploration round `s` of `k`, and an arm whose latest
    ///   draw did not explore was above the cap at that draw.
    pub fn check_invariants(&self, recycles: usize) -> Result<(), String> {
        for k in 0..self.draws.len() {
            if self.draws[k] > 0 && self.explored[k] == 0 {
                return Err(format!("arm {k} drawn {} times but never explored", self.draws[k]));
            }
            if self.explored[k] != self.samples[k].len() && self.samples[k].len() + 1 != self.explored[k] {
                return Err(format!(
                    "arm {k}: {} exploration rounds but {} stored samples",
                    self.explored[k],
                    self.samples[k].len()
                ));
            }
            if !self.forced && self.draws[k] > 0 {
                let (s, draws_s) = self.last_explore[k];
                let cap = self.gamma(s) / s as f64 * draws_s as f64 + 1.0;
                if self.explored[k] as f64 > cap + 1e-9 {
                    return Err(format!(
                        "arm {k}: explored {} exceeds cap {cap} at round {s}",
                        self.explored[k]
                    ));
                }
                let last = self.last_draw[k];
                if last != s && exploration_rule(self.explored[k], self.draws[k], self.gamma(last) / last as f64) {
                    return Err(format!("arm {k}: round {last} passed the rule but did not explore"));
                }
            }
        }
        let reused: usize = self.samples.iter().flatten().map(|s| s.reuse).sum();
        if reused != recycles {
            return Err(format!("reuse counters sum to {reused}, expected {recycles}"));
        }
        Ok(())
    }
}
