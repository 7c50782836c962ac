//! Experiment orchestration: configuration, replicated runs, aggregation,
//! CSV output and the invariant suite used by the CLI.

mod config;
mod environment;
pub mod estimation;
pub mod experiments;
pub mod validate;

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::error::{AlgorithmError, EnvironmentError};
use crate::pareto::{gap_profile, regret_lower_bound, sample_lower_bound};

pub use config::{AlgorithmKind, EnvironmentKind, ExperimentConfig, ExperimentKind};
pub use environment::Environment;
pub use experiments::{run_experiment, AggregateMetrics, AlgorithmSummary, ComparisonOutcome, Manifest};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{0}")]
    Parameter(String),

    #[error(transparent)]
    Environment(#[from] EnvironmentError),

    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, err: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    /// Short category used as the CLI error prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Io { .. } => "io",
            HarnessError::Parameter(_) => "parameter",
            HarnessError::Environment(_) => "environment",
            HarnessError::Algorithm(_) => "algorithm",
        }
    }
}

/// Closed-form lower bounds for an instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub pareto_front: Vec<usize>,
    pub sorted_deltas: Vec<f64>,
    pub min_suboptimal_gap: f64,
    pub sample_lower_bound: f64,
    pub regret_lower_bound: f64,
}

/// Evaluate both lower bounds for `means` in dimension `dim`.
pub fn instance_bounds(
    means: &[Vec<f64>],
    sigma: f64,
    epsilon: f64,
    delta: f64,
    dim: usize,
) -> Result<BoundsReport, HarnessError> {
    if !(delta > 0.0 && delta < 1.0) || !(epsilon > 0.0) || !(sigma >= 0.0) || dim == 0 {
        return Err(HarnessError::Parameter(
            "bounds need delta in (0, 1), epsilon > 0, sigma >= 0 and dim >= 1".into(),
        ));
    }
    let profile = gap_profile(means).map_err(|e| HarnessError::Parameter(e.to_string()))?;
    let n_objectives = means[0].len();
    let min_gap = profile.min_suboptimal_gap(epsilon);
    Ok(BoundsReport {
        pareto_front: profile.pareto_front.clone(),
        sorted_deltas: profile.sorted_deltas(),
        min_suboptimal_gap: min_gap,
        sample_lower_bound: sample_lower_bound(&profile, sigma, n_objectives, delta, epsilon, dim),
        regret_lower_bound: regret_lower_bound(min_gap, sigma, dim, delta),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_arm_bounds() {
        let report = instance_bounds(&[vec![1.0], vec![-1.0], vec![-1.0]], 0.1, 0.5, 0.1, 3).unwrap();
        let expected = 0.01 / 3.0 * (3.0 / 4.0) * 7.5f64.ln();
        assert!((report.sample_lower_bound - expected).abs() < 1e-15);
        assert!((report.sample_lower_bound - 0.00504).abs() < 5e-5);
        assert_eq!(report.pareto_front, vec![0]);
    }

    #[test]
    fn error_kinds_are_distinct() {
        let kinds = [
            HarnessError::Config(String::new()).kind(),
            HarnessError::Io { path: String::new(), message: String::new() }.kind(),
            HarnessError::Parameter(String::new()).kind(),
            HarnessError::Environment(EnvironmentError::BadTable).kind(),
            HarnessError::Algorithm(AlgorithmError::NotMab).kind(),
        ];
        let unique: std::collections::BTreeSet<_> = kinds.iter().collect();
        assert_eq!(unique.len(), kinds.len());
    }
}
