//! Invariant suite behind `pfilin validate`.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::contexts::ContextSet;
use crate::environments::{LinearEnvironment, RewardModel, RewardSource};
use crate::pareto::{dominated_by, gap_profile, pareto_front};
use crate::pfiwr::{run, run_observed, PfiConfig};
use crate::rng::{RngStreams, SimRng};

use super::estimation::{run_estimation, EstimationProtocol, Schedule};
use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, failures: Vec<String>, checked: usize) -> Self {
        let passed = failures.is_empty();
        let detail = if passed {
            format!("{checked} cases")
        } else {
            format!("{} of {checked} failed; first: {}", failures.len(), failures[0])
        };
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Random `d x K` context matrix with column norms in `[0.3, 1]`.
pub fn random_context_matrix(dim: usize, n_arms: usize, rng: &mut SimRng) -> DMatrix<f64> {
    let mut m: DMatrix<f64> = DMatrix::from_fn(dim, n_arms, |_, _| rng.random_range(-1.0..1.0));
    for mut col in m.column_iter_mut() {
        let norm: f64 = col.norm().max(1e-12);
        let target = rng.random_range(0.3..1.0);
        col *= target / norm;
    }
    m
}

fn fixtures(dir: Option<&Path>) -> Result<Vec<(String, ContextSet)>, HarnessError> {
    let mut rng = SimRng::seed_from_u64(0x5eed);
    let mut sets = Vec::new();
    for i in 0..20 {
        let dim = rng.random_range(1..=5);
        let n_arms = rng.random_range(dim..=12);
        let matrix = random_context_matrix(dim, n_arms, &mut rng);
        if let Ok(cs) = ContextSet::from_matrix(matrix) {
            sets.push((format!("random-{i}"), cs));
        }
    }
    sets.push(("euclidean-3".into(), ContextSet::euclidean(3)));
    if let Some(dir) = dir {
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| HarnessError::io(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("contexts")))
            .collect();
        paths.sort();
        for path in paths {
            let cs = ContextSet::load_csv(&path, None).map_err(crate::error::EnvironmentError::from)?;
            sets.push((path.display().to_string(), cs));
        }
    }
    Ok(sets)
}

fn check_svd(sets: &[(String, ContextSet)]) -> CheckResult {
    let mut failures = Vec::new();
    for (name, cs) in sets {
        let mut rebuilt = DMatrix::zeros(cs.dim(), cs.dim());
        for i in 0..cs.dim() {
            let u = cs.left_vector(i);
            rebuilt += u * u.transpose() * cs.eigenvalue(i);
            let pmf_sum: f64 = cs.basis_pmf(i).iter().sum();
            if (pmf_sum - 1.0).abs() > 1e-12 {
                failures.push(format!("{name}: pmf {i} sums to {pmf_sum}"));
            }
            let mut expected = nalgebra::DVector::zeros(cs.dim());
            for (k, p) in cs.basis_pmf(i).iter().enumerate() {
                expected += cs.context(k) * (p * cs.reward_reweight(i, k, 1.0));
            }
            let dev = (expected - cs.basis_context(i)).amax();
            if dev > 1e-10 {
                failures.push(format!("{name}: basis {i} expectation off by {dev}"));
            }
        }
        let dev = (rebuilt - cs.gram()).amax();
        if dev > 1e-10 {
            failures.push(format!("{name}: design reconstruction off by {dev}"));
        }
    }
    CheckResult::new("svd-basis", failures, sets.len())
}

fn check_norm_bound(sets: &[(String, ContextSet)]) -> CheckResult {
    let mut failures = Vec::new();
    for (name, cs) in sets {
        for eps in [1e-8, 1e-4, 1.0] {
            let m = cs.gram() + DMatrix::identity(cs.dim(), cs.dim()) * eps;
            let Some(chol) = m.cholesky() else {
                failures.push(format!("{name}: gram + {eps} I not positive definite"));
                continue;
            };
            for (k, x) in cs.contexts().iter().enumerate() {
                let q = x.dot(&chol.solve(x));
                if q > 1.0 + 1e-9 {
                    failures.push(format!("{name}: arm {k} eps {eps} normalized norm {q}"));
                }
            }
        }
    }
    CheckResult::new("normalized-norm-bound", failures, sets.len())
}

fn check_design_norm(sets: &[(String, ContextSet)]) -> CheckResult {
    let mut failures = Vec::new();
    for (name, cs) in sets {
        for k in 0..cs.n_arms() {
            let mut previous = cs.design_norm(k, 0);
            for t in [1, 2, 5, 10, 50, 100, 1000, 100_000] {
                let value = cs.design_norm(k, t);
                if value > (t as f64).powf(-0.5) + 1e-12 {
                    failures.push(format!("{name}: arm {k} t {t} norm {value}"));
                }
                if value > previous + 1e-15 {
                    failures.push(format!("{name}: arm {k} norm increases at t {t}"));
                }
                previous = value;
            }
        }
    }
    CheckResult::new("design-norm", failures, sets.len())
}

fn check_pareto() -> CheckResult {
    let mut rng = SimRng::seed_from_u64(7);
    let mut failures = Vec::new();
    let cases = 200;
    for case in 0..cases {
        let k = rng.random_range(1..=20);
        let l = rng.random_range(1..=4);
        let means: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..l).map(|_| (rng.random_range(0..8) as f64) / 4.0).collect())
            .collect();
        let front = pareto_front(&means);
        let profile = gap_profile(&means).expect("valid table");
        for a in 0..k {
            let dominated = (0..k).any(|b| dominated_by(&means[a], &means[b]));
            if dominated == front.contains(&a) {
                failures.push(format!("case {case}: arm {a} front membership"));
            }
            let positive_gap = profile.delta_star[a] > 0.0;
            if positive_gap && front.contains(&a) {
                failures.push(format!("case {case}: arm {a} gap {}", profile.delta_star[a]));
            }
        }
    }
    CheckResult::new("pareto-front", failures, cases)
}

fn linear_fixture(seed: u64) -> LinearEnvironment {
    let mut rng = SimRng::seed_from_u64(seed);
    let cs = ContextSet::from_matrix(random_context_matrix(3, 8, &mut rng)).expect("full rank");
    let theta = DMatrix::from_fn(3, 2, |_, _| rng.random_range(-0.5..0.5));
    let model = RewardModel::new(theta, None, 0.1).expect("valid model");
    LinearEnvironment::new(Arc::new(cs), model).expect("consistent shapes")
}

fn check_run_invariants() -> CheckResult {
    let mut failures = Vec::new();
    let mut checked = 0;
    for seed in 0..3 {
        let env = linear_fixture(seed);
        let config = PfiConfig {
            epsilon: 0.2,
            sigma: 0.1,
            theta_max: env.model().theta_max(),
            max_rounds: 600,
            log_updates: true,
            ..PfiConfig::default()
        };
        let result = run_observed(&env, Arc::clone(env.contexts()), &config, RngStreams::new(seed, 0), |view| {
            if let Err(msg) = view.bundle.check_invariants() {
                failures.push(format!("pfiwr seed {seed} round {}: {msg}", view.round));
            }
        });
        if let Err(e) = result {
            failures.push(format!("pfiwr seed {seed}: {e}"));
        }
        checked += 1;

        let protocol = EstimationProtocol {
            horizon: 600,
            schedule: Schedule::Rule,
            exploited_arm: 0,
            delta: 0.1,
            gamma_c: 1.0,
            mixed_on_unmatched: true,
            track_ridge_dr: true,
            log_updates: true,
        };
        let estimation = run_estimation(&env, env.contexts(), &protocol, RngStreams::new(seed, 0), |t, bundle| {
            if let Err(msg) = bundle.check_invariants() {
                failures.push(format!("estimation seed {seed} round {t}: {msg}"));
            }
            Ok(())
        });
        if let Err(e) = estimation {
            failures.push(format!("estimation seed {seed}: {e}"));
        }
        checked += 1;
    }
    CheckResult::new("ledger-and-batch", failures, checked)
}

fn check_determinism() -> CheckResult {
    let env = linear_fixture(11);
    let config = PfiConfig {
        epsilon: 0.2,
        theta_max: env.model().theta_max(),
        max_rounds: 2000,
        ..PfiConfig::default()
    };
    let go = || run(&env, Arc::clone(env.contexts()), &config, RngStreams::new(5, 0));
    let failures = match (go(), go()) {
        (Ok(a), Ok(b)) if a == b => Vec::new(),
        (Ok(_), Ok(_)) => vec!["repeated run differs".to_string()],
        (Err(e), _) | (_, Err(e)) => vec![e.to_string()],
    };
    let mut failures = failures;
    let mut a = RngStreams::new(5, 0);
    let mut b = RngStreams::new(5, 0);
    if (0..100).any(|_| env.pull(0, &mut a.environment) != env.pull(0, &mut b.environment)) {
        failures.push("environment stream not reproducible".into());
    }
    CheckResult::new("determinism", failures, 2)
}

/// Run every check. Context CSVs named `contexts*` in `fixtures_dir` join the
/// built-in random fixtures.
pub fn validation_suite(fixtures_dir: Option<&Path>) -> Result<Vec<CheckResult>, HarnessError> {
    let sets = fixtures(fixtures_dir)?;
    Ok(vec![
        check_svd(&sets),
        check_norm_bound(&sets),
        check_design_norm(&sets),
        check_pareto(),
        check_run_invariants(),
        check_determinism(),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_builtin_fixtures() {
        let results = validation_suite(None).unwrap();
        for r in &results {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
