//! Flat TOML experiment configuration.
//!
//! A config file names an experiment and overrides any of its preset values:
//!
//! ```toml
//! experiment = "pfi-compare"
//! replications = 50
//! epsilons = [0.06, 0.1]
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::contexts::ContextSet;
use crate::environments::{
    load_clustered, load_reward_table, make_mab, surrogate_rewards, LinearEnvironment, NoiseKind,
    RewardModel,
};
use crate::estimators::THEORY_GAMMA_C;

use super::environment::Environment;
use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EstimatorConsistency,
    Density,
    DrImputation,
    PfiCompare,
    Custom,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::EstimatorConsistency => "estimator-consistency",
            ExperimentKind::Density => "density",
            ExperimentKind::DrImputation => "dr-imputation",
            ExperimentKind::PfiCompare => "pfi-compare",
            ExperimentKind::Custom => "custom",
        }
    }

    pub fn is_estimation(self) -> bool {
        matches!(
            self,
            ExperimentKind::EstimatorConsistency | ExperimentKind::Density | ExperimentKind::DrImputation
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvironmentKind {
    Linear,
    Mab,
    Clustered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmKind {
    Pfiwr,
    Multipfi,
}

impl AlgorithmKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmKind::Pfiwr => "pfiwr",
            AlgorithmKind::Multipfi => "multipfi",
        }
    }

    /// Salt separating the algorithm-side random streams of paired runs.
    pub fn salt(self) -> u64 {
        match self {
            AlgorithmKind::Pfiwr => 0,
            AlgorithmKind::Multipfi => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub replications: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,

    pub environment: EnvironmentKind,
    pub sigma: f64,
    pub noise: NoiseKind,
    /// Common correlation between noise components.
    pub noise_correlation: f64,
    /// Mean table (`K` rows of `L` values) for `mab`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<Vec<f64>>>,
    /// Parameter (`d` rows of `L` values) for `linear`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_file: Option<PathBuf>,
    /// Contexts (`K` rows of `d` values) for `linear`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contexts: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contexts_file: Option<PathBuf>,
    /// Raw reward table for `clustered`; the built-in surrogate when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rewards_file: Option<PathBuf>,
    pub clusters: usize,
    pub cluster_seed: u64,
    pub surrogate_seed: u64,

    pub algorithms: Vec<AlgorithmKind>,
    pub epsilons: Vec<f64>,
    pub delta: f64,
    pub gamma_c: f64,
    /// Use the theory constant for `gamma_t` instead of `gamma_c`.
    pub theory_gamma: bool,
    /// Overrides the parameter-norm bound used by confidence radii.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_max: Option<f64>,
    /// Overrides the noise scale used by confidence radii.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_sigma: Option<f64>,
    pub max_rounds: usize,
    pub radius_scale: f64,
    pub mixed_on_unmatched: bool,
    pub curve_stride: usize,
    /// Number of leading replications whose round logs are written.
    pub round_logs: usize,

    pub horizon: usize,
    pub explore_rounds: usize,
    pub exploited_arm: usize,
    pub checkpoints: Vec<usize>,
}

impl ExperimentConfig {
    /// Paper-protocol defaults of `kind` at CI scale.
    pub fn preset(kind: ExperimentKind) -> Self {
        let mut config = Self {
            experiment: kind,
            replications: 200,
            seed: 0,
            workers: 0,
            environment: EnvironmentKind::Mab,
            sigma: 0.1,
            noise: NoiseKind::Gaussian,
            noise_correlation: 0.0,
            means: Some(vec![vec![1.0], vec![-1.0], vec![-1.0]]),
            theta: None,
            theta_file: None,
            contexts: None,
            contexts_file: None,
            rewards_file: None,
            clusters: 16,
            cluster_seed: 0,
            surrogate_seed: 0,
            algorithms: vec![AlgorithmKind::Pfiwr],
            epsilons: vec![0.5],
            delta: 0.1,
            gamma_c: 1.0,
            theory_gamma: false,
            theta_max: None,
            bound_sigma: None,
            max_rounds: 100_000,
            radius_scale: 1.0,
            mixed_on_unmatched: true,
            curve_stride: 1,
            round_logs: 0,
            horizon: 2000,
            explore_rounds: 50,
            exploited_arm: 0,
            checkpoints: vec![50, 500, 2000],
        };
        if kind == ExperimentKind::PfiCompare {
            config.environment = EnvironmentKind::Clustered;
            config.means = None;
            config.algorithms = vec![AlgorithmKind::Pfiwr, AlgorithmKind::Multipfi];
            config.epsilons = (0..7).map(|i| [0.06, 0.08, 0.1, 0.12, 0.14, 0.16, 0.18][i]).collect();
            config.gamma_c = 0.01;
            config.curve_stride = 100;
        }
        config
    }

    /// Parse TOML text on top of the preset named by its `experiment` key.
    /// Relative paths resolve against `base_dir`.
    pub fn from_toml(text: &str, base_dir: Option<&Path>) -> Result<Self, HarnessError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.message().to_string()))?;
        let kind = match table.get("experiment") {
            Some(value) => value
                .clone()
                .try_into::<ExperimentKind>()
                .map_err(|e| HarnessError::Config(format!("experiment: {}", e.message())))?,
            None => return Err(HarnessError::Config("missing key `experiment`".into())),
        };
        let preset = toml::Table::try_from(Self::preset(kind))
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let mut merged = preset;
        for (key, value) in table {
            merged.insert(key, value);
        }
        let mut config: Self = merged
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.message().to_string()))?;
        if let Some(base) = base_dir {
            for path in [
                &mut config.theta_file,
                &mut config.contexts_file,
                &mut config.rewards_file,
            ]
            .into_iter()
            .flatten()
            {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text, path.parent())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn effective_gamma_c(&self) -> f64 {
        if self.theory_gamma {
            THEORY_GAMMA_C
        } else {
            self.gamma_c
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Parameter(msg));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return bad("epsilons must be a nonempty list of positive values".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be finite and nonnegative, got {}", self.sigma));
        }
        if !(self.noise_correlation >= -1.0 && self.noise_correlation <= 1.0) {
            return bad("noise_correlation must lie in [-1, 1]".into());
        }
        if !(self.gamma_c > 0.0) {
            return bad("gamma_c must be positive".into());
        }
        if !(self.radius_scale >= 0.0) {
            return bad("radius_scale must be nonnegative".into());
        }
        if self.max_rounds == 0 || self.curve_stride == 0 || self.horizon == 0 {
            return bad("max_rounds, curve_stride and horizon must be at least 1".into());
        }
        if self.clusters == 0 {
            return bad("clusters must be at least 1".into());
        }
        if self.explore_rounds > self.horizon {
            return bad("explore_rounds exceeds horizon".into());
        }
        if let Some(n) = self.checkpoints.iter().find(|&&n| n == 0 || n > self.horizon) {
            return bad(format!("checkpoint {n} outside 1..=horizon"));
        }
        if self.theta_max.is_some_and(|v| !(v >= 0.0)) || self.bound_sigma.is_some_and(|v| !(v >= 0.0)) {
            return bad("theta_max and bound_sigma must be nonnegative".into());
        }
        if self.algorithms.is_empty() {
            return bad("algorithms must not be empty".into());
        }
        if self.algorithms.contains(&AlgorithmKind::Multipfi) && self.environment == EnvironmentKind::Linear {
            return bad("multipfi needs a mab or clustered environment".into());
        }
        if self.experiment == ExperimentKind::PfiCompare
            && !(self.algorithms.contains(&AlgorithmKind::Pfiwr)
                && self.algorithms.contains(&AlgorithmKind::Multipfi))
        {
            return bad("pfi-compare runs both pfiwr and multipfi".into());
        }
        if self.experiment.is_estimation() && self.environment == EnvironmentKind::Clustered {
            return bad("estimation experiments need a mab or linear environment".into());
        }
        Ok(())
    }

    fn noise_matrix(&self, l: usize) -> DMatrix<f64> {
        DMatrix::from_fn(l, l, |i, j| if i == j { 1.0 } else { self.noise_correlation })
    }

    /// Build the configured environment.
    pub fn build_environment(&self) -> Result<Environment, HarnessError> {
        let env = match self.environment {
            EnvironmentKind::Mab => {
                let means = self
                    .means
                    .as_ref()
                    .ok_or_else(|| HarnessError::Config("mab environment needs `means`".into()))?;
                let (contexts, model) = make_mab(means, self.sigma)?;
                let l = model.n_objectives();
                let model = RewardModel::with_noise(
                    model.theta().clone(),
                    None,
                    self.sigma,
                    self.noise_matrix(l),
                    self.noise,
                )?;
                Environment::Linear(LinearEnvironment::new(contexts, model)?)
            }
            EnvironmentKind::Linear => {
                let contexts = match (&self.contexts, &self.contexts_file) {
                    (Some(rows), None) => ContextSet::from_rows(rows).map_err(crate::error::EnvironmentError::from)?,
                    (None, Some(path)) => {
                        ContextSet::load_csv(path, None).map_err(crate::error::EnvironmentError::from)?
                    }
                    _ => {
                        return Err(HarnessError::Config(
                            "linear environment needs exactly one of `contexts` or `contexts_file`".into(),
                        ))
                    }
                };
                let rows = match (&self.theta, &self.theta_file) {
                    (Some(rows), None) => rows.clone(),
                    (None, Some(path)) => load_reward_table(path)?,
                    _ => {
                        return Err(HarnessError::Config(
                            "linear environment needs exactly one of `theta` or `theta_file`".into(),
                        ))
                    }
                };
                let l = rows.first().map(Vec::len).unwrap_or(0);
                if l == 0 || rows.iter().any(|r| r.len() != l) {
                    return Err(HarnessError::Config("theta rows must be nonempty and equal length".into()));
                }
                let theta = DMatrix::from_fn(rows.len(), l, |i, j| rows[i][j]);
                let model = RewardModel::with_noise(theta, None, self.sigma, self.noise_matrix(l), self.noise)?;
                Environment::Linear(LinearEnvironment::new(Arc::new(contexts), model)?)
            }
            EnvironmentKind::Clustered => {
                let rows = match &self.rewards_file {
                    Some(path) => load_reward_table(path)?,
                    None => surrogate_rewards(self.surrogate_seed),
                };
                Environment::Clustered(load_clustered(&rows, self.clusters, self.cluster_seed)?)
            }
        };
        if self.experiment.is_estimation() && self.exploited_arm >= env.contexts().n_arms() {
            return Err(HarnessError::Parameter(format!(
                "exploited_arm {} out of range",
                self.exploited_arm
            )));
        }
        Ok(env)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_roundtrip_through_toml() {
        for kind in [
            ExperimentKind::EstimatorConsistency,
            ExperimentKind::Density,
            ExperimentKind::DrImputation,
            ExperimentKind::PfiCompare,
            ExperimentKind::Custom,
        ] {
            let preset = ExperimentConfig::preset(kind);
            let parsed = ExperimentConfig::from_toml(&preset.to_toml(), None).unwrap();
            assert_eq!(parsed, preset);
        }
    }

    #[test]
    fn overrides_and_errors() {
        let config = ExperimentConfig::from_toml("experiment = \"pfi-compare\"\nreplications = 3", None).unwrap();
        assert_eq!(config.replications, 3);
        assert_eq!(config.epsilons.len(), 7);
        assert!((config.epsilons[6] - 0.18).abs() < 1e-12);
        assert_eq!(config.delta, 0.1);

        let unknown = ExperimentConfig::from_toml("experiment = \"custom\"\nbogus = 1", None);
        assert!(matches!(unknown, Err(HarnessError::Config(_))));
        let missing = ExperimentConfig::from_toml("replications = 1", None);
        assert!(matches!(missing, Err(HarnessError::Config(_))));
        let range = ExperimentConfig::from_toml("experiment = \"custom\"\ndelta = 1.5", None);
        assert!(matches!(range, Err(HarnessError::Parameter(_))));
    }
}
