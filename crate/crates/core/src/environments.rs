//! Stochastic reward generators.
//!
//! * [`LinearEnvironment`]: `Y = Theta^T x_k + eta` with correlated
//!   sub-Gaussian noise.
//! * [`ClusteredEnvironment`]: arms are clusters of a standardized reward
//!   table; a pull returns a uniformly drawn member of the cluster.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::contexts::{read_float_table, ContextSet};
use crate::error::EnvironmentError;
use crate::kmeans::{kmeans, KMeansConfig};

/// Anything an algorithm can pull.
pub trait RewardSource {
    fn n_arms(&self) -> usize;
    fn n_objectives(&self) -> usize;
    /// Ground-truth mean reward vector of each arm.
    fn means(&self) -> &[Vec<f64>];
    fn pull<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Vec<f64>;
}

/// Shape of the standardized noise before scaling by `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    /// Independent `unif[-sqrt 3, sqrt 3]` components (unit variance, bounded).
    Uniform,
}

#[derive(Debug, Clone)]
pub struct RewardModel {
    theta: DMatrix<f64>,
    theta_max: f64,
    sigma: f64,
    noise_corr: DMatrix<f64>,
    noise_root: DMatrix<f64>,
    noise: NoiseKind,
}

impl RewardModel {
    /// `theta` is `d x L`; `theta_max` defaults to the largest column norm.
    pub fn new(
        theta: DMatrix<f64>,
        theta_max: Option<f64>,
        sigma: f64,
    ) -> Result<Self, EnvironmentError> {
        let l = theta.ncols();
        Self::with_noise(theta, theta_max, sigma, DMatrix::identity(l, l), NoiseKind::Gaussian)
    }

    pub fn with_noise(
        theta: DMatrix<f64>,
        theta_max: Option<f64>,
        sigma: f64,
        noise_corr: DMatrix<f64>,
        noise: NoiseKind,
    ) -> Result<Self, EnvironmentError> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(EnvironmentError::Sigma(sigma));
        }
        let max_norm = theta
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let theta_max = theta_max.unwrap_or(max_norm);
        for (objective, column) in theta.column_iter().enumerate() {
            let norm = column.norm();
            if norm > theta_max + 1e-9 {
                return Err(EnvironmentError::ThetaNorm {
                    objective,
                    norm,
                    theta_max,
                });
            }
        }
        let noise_root = correlation_root(&noise_corr, theta.ncols())?;
        Ok(Self {
            theta,
            theta_max,
            sigma,
            noise_corr,
            noise_root,
            noise,
        })
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn noise_corr(&self) -> &DMatrix<f64> {
        &self.noise_corr
    }

    pub fn n_objectives(&self) -> usize {
        self.theta.ncols()
    }

    /// One draw of `eta` with covariance `sigma^2 * noise_corr`.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let l = self.theta.ncols();
        let z = DVector::from_fn(l, |_, _| match self.noise {
            NoiseKind::Gaussian => StandardNormal.sample(rng),
            NoiseKind::Uniform => rng.random_range(-3f64.sqrt()..3f64.sqrt()),
        });
        &self.noise_root * z * self.sigma
    }
}

/// Symmetric square root of a correlation matrix (works for singular PSD input).
fn correlation_root(corr: &DMatrix<f64>, l: usize) -> Result<DMatrix<f64>, EnvironmentError> {
    if corr.shape() != (l, l) {
        return Err(EnvironmentError::NoiseCorrelation(format!(
            "expected {l}x{l}, found {}x{}",
            corr.nrows(),
            corr.ncols()
        )));
    }
    for i in 0..l {
        if (corr[(i, i)] - 1.0).abs() > 1e-12 {
            return Err(EnvironmentError::NoiseCorrelation(format!(
                "diagonal entry {i} is {}",
                corr[(i, i)]
            )));
        }
        for j in 0..i {
            if (corr[(i, j)] - corr[(j, i)]).abs() > 1e-12 {
                return Err(EnvironmentError::NoiseCorrelation("not symmetric".into()));
            }
        }
    }
    let eig = corr.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&v| v < -1e-10) {
        return Err(EnvironmentError::NoiseCorrelation(
            "not positive semidefinite".into(),
        ));
    }
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * sqrt * eig.eigenvectors.transpose())
}

/// Linear contexts with a [`RewardModel`].
#[derive(Debug, Clone)]
pub struct LinearEnvironment {
    contexts: Arc<ContextSet>,
    model: RewardModel,
    means: Vec<Vec<f64>>,
}

impl LinearEnvironment {
    pub fn new(contexts: Arc<ContextSet>, model: RewardModel) -> Result<Self, EnvironmentError> {
        if model.theta.nrows() != contexts.dim() {
            return Err(EnvironmentError::ThetaShape {
                found: model.theta.nrows(),
                expected: contexts.dim(),
            });
        }
        let means = contexts
            .contexts()
            .iter()
            .map(|x| (model.theta.transpose() * x).iter().copied().collect())
            .collect();
        Ok(Self {
            contexts,
            model,
            means,
        })
    }

    pub fn contexts(&self) -> &Arc<ContextSet> {
        &self.contexts
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }
}

impl RewardSource for LinearEnvironment {
    fn n_arms(&self) -> usize {
        self.means.len()
    }

    fn n_objectives(&self) -> usize {
        self.model.n_objectives()
    }

    fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    fn pull<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Vec<f64> {
        if self.model.sigma == 0.0 {
            return self.means[arm].clone();
        }
        let noise = self.model.sample_noise(rng);
        self.means[arm]
            .iter()
            .zip(noise.iter())
            .map(|(m, e)| m + e)
            .collect()
    }
}

/// Multi-armed bandit as a linear bandit: `X = I_K`, `Theta = means^T`.
pub fn make_mab(
    means: &[Vec<f64>],
    sigma: f64,
) -> Result<(Arc<ContextSet>, RewardModel), EnvironmentError> {
    let k = means.len();
    let l = means.first().map(Vec::len).unwrap_or(0);
    if k == 0 || l == 0 || means.iter().any(|row| row.len() != l) {
        return Err(EnvironmentError::BadMeans);
    }
    let contexts = Arc::new(ContextSet::euclidean(k));
    let theta = DMatrix::from_fn(k, l, |arm, obj| means[arm][obj]);
    let model = RewardModel::new(theta, None, sigma)?;
    Ok((contexts, model))
}

pub fn mab_environment(means: &[Vec<f64>], sigma: f64) -> Result<LinearEnvironment, EnvironmentError> {
    let (contexts, model) = make_mab(means, sigma)?;
    LinearEnvironment::new(contexts, model)
}

/// Per-component standardization applied to a raw table.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ClusteredEnvironment {
    clusters: Vec<Vec<Vec<f64>>>,
    means: Vec<Vec<f64>>,
    normalization: Normalization,
}

impl ClusteredEnvironment {
    /// Build directly from already-standardized clusters.
    pub fn from_clusters(
        clusters: Vec<Vec<Vec<f64>>>,
        normalization: Normalization,
    ) -> Result<Self, EnvironmentError> {
        if clusters.is_empty() || clusters.iter().any(Vec::is_empty) {
            return Err(EnvironmentError::BadTable);
        }
        let l = clusters[0][0].len();
        let means = clusters
            .iter()
            .map(|members| {
                let n = members.len() as f64;
                (0..l)
                    .map(|c| members.iter().map(|m| m[c]).sum::<f64>() / n)
                    .collect()
            })
            .collect();
        Ok(Self {
            clusters,
            means,
            normalization,
        })
    }

    pub fn clusters(&self) -> &[Vec<Vec<f64>>] {
        &self.clusters
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        self.clusters.iter().map(Vec::len).collect()
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    /// Largest absolute deviation of a member from its cluster mean. Pull
    /// noise is bounded by it, so it is a valid sub-Gaussian scale.
    pub fn subgaussian_scale(&self) -> f64 {
        self.clusters
            .iter()
            .zip(&self.means)
            .flat_map(|(members, mean)| {
                members
                    .iter()
                    .flat_map(move |m| m.iter().zip(mean).map(|(a, b)| (a - b).abs()))
            })
            .fold(0.0, f64::max)
    }

    /// Euclidean-basis contexts matching the cluster arms.
    pub fn contexts(&self) -> Arc<ContextSet> {
        Arc::new(ContextSet::euclidean(self.clusters.len()))
    }

    /// Largest per-objective norm of the mean table (`theta_max` of the MAB
    /// reduction).
    pub fn theta_max(&self) -> f64 {
        let l = self.n_objectives();
        (0..l)
            .map(|c| self.means.iter().map(|m| m[c] * m[c]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

impl RewardSource for ClusteredEnvironment {
    fn n_arms(&self) -> usize {
        self.clusters.len()
    }

    fn n_objectives(&self) -> usize {
        self.means[0].len()
    }

    fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    fn pull<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Vec<f64> {
        let members = &self.clusters[arm];
        members[rng.random_range(0..members.len())].clone()
    }
}

/// Standardize `rows`, cluster them into `n_clusters` groups and build the
/// environment. `seed` drives the k-means restarts.
pub fn load_clustered(
    rows: &[Vec<f64>],
    n_clusters: usize,
    seed: u64,
) -> Result<ClusteredEnvironment, EnvironmentError> {
    let n = rows.len();
    if n == 0 || rows[0].is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(EnvironmentError::BadTable);
    }
    if n_clusters == 0 || n < n_clusters {
        return Err(EnvironmentError::TooFewRows {
            rows: n,
            clusters: n_clusters,
        });
    }
    let l = rows[0].len();
    let mut mean = vec![0.0; l];
    let mut sd = vec![0.0; l];
    for c in 0..l {
        mean[c] = rows.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        let var = rows.iter().map(|r| (r[c] - mean[c]).powi(2)).sum::<f64>() / n as f64;
        sd[c] = var.sqrt();
        if sd[c] == 0.0 || !sd[c].is_finite() {
            return Err(EnvironmentError::DegenerateColumn(c));
        }
    }
    let standardized: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| (0..l).map(|c| (r[c] - mean[c]) / sd[c]).collect())
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fit = kmeans(&standardized, n_clusters, &KMeansConfig::default(), &mut rng);
    let mut clusters = vec![Vec::new(); n_clusters];
    for (row, &label) in standardized.into_iter().zip(&fit.labels) {
        clusters[label].push(row);
    }
    ClusteredEnvironment::from_clusters(clusters, Normalization { mean, sd })
}

pub fn load_reward_table(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>, EnvironmentError> {
    Ok(read_float_table(path.as_ref())?)
}

/// Cluster centers of the built-in surrogate, in raw units. Arms 0..5 form the
/// front after standardization; the rest sit at least ~0.45 below it.
pub const SURROGATE_CENTERS: [[f64; 2]; 16] = [
    [2.0, -1.6],
    [1.4, -0.5],
    [0.7, 0.5],
    [-0.2, 1.3],
    [-1.2, 2.0],
    [1.2, -2.2],
    [0.3, -1.3],
    [-0.6, -0.4],
    [-1.5, 0.5],
    [-2.2, 1.2],
    [0.6, -2.4],
    [-0.4, -1.8],
    [-1.3, -1.0],
    [-2.1, -0.3],
    [-1.4, -2.3],
    [-2.4, -1.6],
];

pub const SURROGATE_PER_CLUSTER: usize = 64;
pub const SURROGATE_SCATTER: f64 = 0.05;

/// A 1024 x 2 raw reward table: 64 Gaussian draws around each of 16 centers.
pub fn surrogate_rewards(seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(SURROGATE_CENTERS.len() * SURROGATE_PER_CLUSTER);
    for center in SURROGATE_CENTERS {
        for _ in 0..SURROGATE_PER_CLUSTER {
            rows.push(
                center
                    .iter()
                    .map(|c| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        c + SURROGATE_SCATTER * z
                    })
                    .collect(),
            );
        }
    }
    rows
}
