//! Fixed context matrix, its reduced SVD and the basis sampling distributions.
//!
//! For a context matrix `X = [x_1, ..., x_K]` (d x K) with singular triplets
//! `(s_i, u_i, v_i)`, the randomized action `a ~ pi^(i)` with
//! `pi^(i)_k = |v_ik| / ||v_i||_1` and the reweighted reward
//! `||v_i||_1 * sign(v_ia) * Y_a` is an unbiased observation of the reward on
//! the scaled basis context `s_i u_i`. The eigenvalues of `X X^T` are
//! `lambda_i = s_i^2`, so `s_i = sqrt(lambda_i)`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::ContextError;

const NORM_TOLERANCE: f64 = 1e-9;

/// Sign with `sign(0) = +1`.
#[inline]
pub fn sign(value: f64) -> f64 {
    if value < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone)]
pub struct ContextSet {
    matrix: DMatrix<f64>,
    contexts: Vec<DVector<f64>>,
    left: Vec<DVector<f64>>,
    right: Vec<DVector<f64>>,
    singular: Vec<f64>,
    pmfs: Vec<Vec<f64>>,
    samplers: Vec<WeightedIndex<f64>>,
    v_l1: Vec<f64>,
    basis_contexts: Vec<DVector<f64>>,
    gram: DMatrix<f64>,
    // projections[k][i] = u_i^T x_k
    projections: Vec<Vec<f64>>,
}

impl ContextSet {
    /// Build from a `d x K` matrix whose columns are the arm contexts.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self, ContextError> {
        let (dim, n_arms) = matrix.shape();
        if dim == 0 || n_arms == 0 {
            return Err(ContextError::Empty);
        }
        for (arm, column) in matrix.column_iter().enumerate() {
            let norm = column.norm();
            if !norm.is_finite() || norm > 1.0 + NORM_TOLERANCE {
                return Err(ContextError::NormViolation { arm, norm });
            }
        }
        if n_arms < dim {
            return Err(ContextError::RankDeficient {
                rank: n_arms,
                dim,
            });
        }

        let svd = matrix.clone().svd(true, true);
        let u = svd.u.as_ref().expect("left vectors requested");
        let v_t = svd.v_t.as_ref().expect("right vectors requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

        let s_max = svd.singular_values[order[0]];
        let tolerance = dim as f64 * f64::EPSILON * s_max;
        let rank = order
            .iter()
            .filter(|&&i| svd.singular_values[i] > tolerance)
            .count();
        if rank < dim || s_max == 0.0 {
            return Err(ContextError::RankDeficient { rank, dim });
        }

        let mut left = Vec::with_capacity(dim);
        let mut right = Vec::with_capacity(dim);
        let mut singular = Vec::with_capacity(dim);
        for &i in order.iter().take(dim) {
            left.push(u.column(i).into_owned());
            right.push(v_t.row(i).transpose().into_owned());
            singular.push(svd.singular_values[i]);
        }

        let mut pmfs = Vec::with_capacity(dim);
        let mut samplers = Vec::with_capacity(dim);
        let mut v_l1 = Vec::with_capacity(dim);
        for v in &right {
            let l1: f64 = v.iter().map(|x| x.abs()).sum();
            let pmf: Vec<f64> = v.iter().map(|x| x.abs() / l1).collect();
            samplers.push(WeightedIndex::new(&pmf).expect("nonzero right singular vector"));
            pmfs.push(pmf);
            v_l1.push(l1);
        }

        let basis_contexts = left
            .iter()
            .zip(&singular)
            .map(|(u, s)| u * *s)
            .collect();
        let contexts: Vec<DVector<f64>> = matrix
            .column_iter()
            .map(|c| c.into_owned())
            .collect();
        let gram = &matrix * matrix.transpose();
        let projections = contexts
            .iter()
            .map(|x| left.iter().map(|u| u.dot(x)).collect())
            .collect();

        Ok(Self {
            matrix,
            contexts,
            left,
            right,
            singular,
            pmfs,
            samplers,
            v_l1,
            basis_contexts,
            gram,
            projections,
        })
    }

    /// Build from one context vector per arm.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ContextError> {
        let n_arms = rows.len();
        if n_arms == 0 {
            return Err(ContextError::Empty);
        }
        let dim = rows[0].len();
        for (row, values) in rows.iter().enumerate() {
            if values.len() != dim {
                return Err(ContextError::DimensionMismatch {
                    row,
                    found: values.len(),
                    expected: dim,
                });
            }
        }
        let matrix = DMatrix::from_fn(dim, n_arms, |i, k| rows[k][i]);
        Self::from_matrix(matrix)
    }

    /// Euclidean basis contexts `X = I_K`: the multi-armed bandit reduction.
    pub fn euclidean(n_arms: usize) -> Self {
        Self::from_matrix(DMatrix::identity(n_arms, n_arms)).expect("identity spans R^K")
    }

    /// Load a CSV with one row per arm and `dim` columns. A non-numeric first
    /// row is treated as a header.
    pub fn load_csv(path: impl AsRef<Path>, dim: Option<usize>) -> Result<Self, ContextError> {
        let rows = read_float_table(path.as_ref())?;
        if let (Some(expected), Some(first)) = (dim, rows.first()) {
            if first.len() != expected {
                return Err(ContextError::DimensionMismatch {
                    row: 0,
                    found: first.len(),
                    expected,
                });
            }
        }
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.left.len()
    }

    pub fn n_arms(&self) -> usize {
        self.contexts.len()
    }

    /// The `d x K` context matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn context(&self, arm: usize) -> &DVector<f64> {
        &self.contexts[arm]
    }

    pub fn contexts(&self) -> &[DVector<f64>] {
        &self.contexts
    }

    pub fn left_vector(&self, basis: usize) -> &DVector<f64> {
        &self.left[basis]
    }

    pub fn right_vector(&self, basis: usize) -> &DVector<f64> {
        &self.right[basis]
    }

    /// Singular value `s_i = sqrt(lambda_i)`.
    pub fn singular_value(&self, basis: usize) -> f64 {
        self.singular[basis]
    }

    /// Eigenvalue `lambda_i = s_i^2` of `sum_k x_k x_k^T`.
    pub fn eigenvalue(&self, basis: usize) -> f64 {
        self.singular[basis] * self.singular[basis]
    }

    /// Scaled basis context `sqrt(lambda_i) u_i`.
    pub fn basis_context(&self, basis: usize) -> &DVector<f64> {
        &self.basis_contexts[basis]
    }

    pub fn basis_contexts(&self) -> &[DVector<f64>] {
        &self.basis_contexts
    }

    pub fn basis_pmf(&self, basis: usize) -> &[f64] {
        &self.pmfs[basis]
    }

    pub fn v_l1_norm(&self, basis: usize) -> f64 {
        self.v_l1[basis]
    }

    /// `sum_k x_k x_k^T`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn is_euclidean_basis(&self) -> bool {
        let (d, k) = self.matrix.shape();
        d == k
            && self
                .matrix
                .iter()
                .enumerate()
                .all(|(idx, &x)| {
                    let (row, col) = (idx % d, idx / d);
                    if row == col {
                        x == 1.0
                    } else {
                        x == 0.0
                    }
                })
    }

    /// Draw an arm from `pi^(basis)`.
    pub fn sample_basis_action<R: Rng + ?Sized>(&self, basis: usize, rng: &mut R) -> usize {
        self.samplers[basis].sample(rng)
    }

    /// `||v_i||_1 * sign(v_ik) * reward`.
    pub fn reward_reweight(&self, basis: usize, arm: usize, reward: f64) -> f64 {
        self.v_l1[basis] * sign(self.right[basis][arm]) * reward
    }

    /// `||x_k||_{F_t^{-1}}` with `F_t = t * sum_k x_k x_k^T + I`.
    pub fn design_norm(&self, arm: usize, t: usize) -> f64 {
        let t = t as f64;
        self.projections[arm]
            .iter()
            .enumerate()
            .map(|(i, p)| p * p / (t * self.eigenvalue(i) + 1.0))
            .sum::<f64>()
            .sqrt()
    }

    pub fn design_matrix(&self, t: usize) -> DesignMatrix {
        DesignMatrix {
            gram_sum: self.gram.clone(),
            t,
        }
    }
}

/// `F_t = t * gram_sum + I_d`.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub gram_sum: DMatrix<f64>,
    pub t: usize,
}

impl DesignMatrix {
    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.gram_sum.nrows();
        &self.gram_sum * self.t as f64 + DMatrix::identity(d, d)
    }

    /// `x^T F_t^{-1} x` through an explicit Cholesky solve.
    pub fn quad_form(&self, x: &DVector<f64>) -> f64 {
        let chol = self
            .matrix()
            .cholesky()
            .expect("F_t is positive definite");
        x.dot(&chol.solve(x))
    }
}

pub(crate) fn read_float_table(path: &Path) -> Result<Vec<Vec<f64>>, ContextError> {
    let io_err = |e: &dyn std::fmt::Display| ContextError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_err(&e))?;
    let mut rows = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io_err(&e))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(values) => rows.push(values),
            Err(_) if row == 0 => continue,
            Err(e) => {
                return Err(ContextError::Parse {
                    row,
                    value: record.iter().collect::<Vec<_>>().join(","),
                    reason: e.to_string(),
                })
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_contexts(dim: usize, n_arms: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DMatrix::from_fn(dim, n_arms, |_, _| rng.random_range(-1.0..1.0));
        for mut col in m.column_iter_mut() {
            let n = col.norm();
            let target = rng.random_range(0.3..1.0);
            col *= target / n;
        }
        m
    }

    #[test]
    fn identity_has_unit_basis_and_point_masses() {
        let cs = ContextSet::euclidean(3);
        for i in 0..3 {
            assert!((cs.eigenvalue(i) - 1.0).abs() < 1e-12);
            let arm = cs
                .basis_pmf(i)
                .iter()
                .position(|&p| (p - 1.0).abs() < 1e-12)
                .expect("point mass");
            assert!((cs.left_vector(i)[arm].abs() - 1.0).abs() < 1e-12);
        }
        assert!(cs.is_euclidean_basis());
    }

    #[test]
    fn identical_columns_split_evenly() {
        let cs = ContextSet::from_rows(&[vec![0.5], vec![0.5]]).unwrap();
        assert_eq!(cs.dim(), 1);
        assert!((cs.basis_pmf(0)[0] - 0.5).abs() < 1e-12);
        assert!((cs.basis_pmf(0)[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_matches_input() {
        let x = random_contexts(4, 10, 11);
        let cs = ContextSet::from_matrix(x.clone()).unwrap();
        let mut rebuilt = DMatrix::zeros(4, 10);
        for i in 0..4 {
            rebuilt += cs.left_vector(i) * cs.right_vector(i).transpose() * cs.singular_value(i);
        }
        assert!((&x - rebuilt).norm() <= 1e-10 * x.norm().max(1.0));
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((cs.left_vector(i).dot(cs.left_vector(j)) - expected).abs() < 1e-10);
            }
            let total: f64 = cs.basis_pmf(i).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_rank_deficient_and_long_columns() {
        let flat = DMatrix::from_row_slice(2, 3, &[0.25, 0.1, 0.05, 0.5, 0.2, 0.1]);
        assert!(matches!(
            ContextSet::from_matrix(flat),
            Err(ContextError::RankDeficient { .. })
        ));
        let long = DMatrix::from_row_slice(1, 2, &[1.5, 0.2]);
        assert!(matches!(
            ContextSet::from_matrix(long),
            Err(ContextError::NormViolation { arm: 0, .. })
        ));
    }

    #[test]
    fn reweight_sign_follows_right_vector() {
        let cs = ContextSet::euclidean(3);
        let arm = cs.basis_pmf(0).iter().position(|&p| p > 0.5).unwrap();
        let y = cs.reward_reweight(0, arm, 0.7);
        assert!((y.abs() - 0.7).abs() < 1e-12);
        assert_eq!(y.signum(), sign(cs.right_vector(0)[arm]));

        // d = 1, v proportional to (-0.6, 0.8): arm with negative entry flips sign.
        let cs = ContextSet::from_rows(&[vec![-0.6], vec![0.8]]).unwrap();
        let v = cs.right_vector(0);
        let neg = if v[0] < 0.0 { 0 } else { 1 };
        assert!((cs.reward_reweight(0, neg, 1.0) + cs.v_l1_norm(0)).abs() < 1e-12);
    }

    #[test]
    fn design_norm_examples() {
        let cs = ContextSet::euclidean(3);
        for k in 0..3 {
            assert!((cs.design_norm(k, 100) - 1.0 / 101f64.sqrt()).abs() < 1e-12);
        }
        let cs = ContextSet::from_matrix(random_contexts(3, 7, 5)).unwrap();
        for k in 0..7 {
            assert!((cs.design_norm(k, 0) - cs.context(k).norm()).abs() < 1e-12);
            let explicit = cs.design_matrix(50).quad_form(cs.context(k)).sqrt();
            assert!((cs.design_norm(k, 50) - explicit).abs() < 1e-12);
            assert!(cs.design_norm(k, 50) <= 1.0 / 50f64.sqrt());
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let cs = ContextSet::from_matrix(random_contexts(3, 9, 2)).unwrap();
        let a: Vec<usize> = {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            (0..20).map(|_| cs.sample_basis_action(1, &mut rng)).collect()
        };
        let b: Vec<usize> = {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            (0..20).map(|_| cs.sample_basis_action(1, &mut rng)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_frequencies_follow_pmf() {
        let cs = ContextSet::from_rows(&[vec![0.5], vec![0.5]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| cs.sample_basis_action(0, &mut rng) == 0)
            .count();
        assert!((hits as f64 / n as f64 - 0.5).abs() < 0.01);
    }
}
