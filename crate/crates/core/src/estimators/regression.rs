use nalgebra::{DMatrix, DVector};

use crate::error::EstimatorError;

/// Regularized least squares over `L` objectives sharing one Gram matrix:
/// `gram = sum x x^T + prior I`, `moments = sum x y^T`, `theta = gram^{-1} moments`.
#[derive(Debug, Clone)]
pub struct Regression {
    gram: DMatrix<f64>,
    moments: DMatrix<f64>,
    prior: f64,
    log: Option<Vec<(DVector<f64>, Vec<f64>)>>,
}

impl Regression {
    pub fn new(dim: usize, n_objectives: usize, prior: f64) -> Self {
        Self {
            gram: DMatrix::identity(dim, dim) * prior,
            moments: DMatrix::zeros(dim, n_objectives),
            prior,
            log: None,
        }
    }

    /// Keep every update so the state can be recomputed in batch.
    pub fn with_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn n_objectives(&self) -> usize {
        self.moments.ncols()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `d x L` matrix whose column `l` is `b^(l)`.
    pub fn moments(&self) -> &DMatrix<f64> {
        &self.moments
    }

    pub fn update(&mut self, x: &DVector<f64>, y: &[f64]) {
        debug_assert_eq!(y.len(), self.moments.ncols());
        self.gram.ger(1.0, x, x, 1.0);
        for (l, &value) in y.iter().enumerate() {
            self.moments.column_mut(l).axpy(value, x, 1.0);
        }
        if let Some(log) = self.log.as_mut() {
            log.push((x.clone(), y.to_vec()));
        }
    }

    /// `d x L` parameter estimate through a Cholesky solve.
    pub fn solve(&self) -> Result<DMatrix<f64>, EstimatorError> {
        let chol = self
            .gram
            .clone()
            .cholesky()
            .ok_or(EstimatorError::NotPositiveDefinite)?;
        Ok(chol.solve(&self.moments))
    }

    /// Gram and moments recomputed from the update log, if logging.
    pub fn batch(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let log = self.log.as_ref()?;
        let d = self.dim();
        let l = self.n_objectives();
        let xs = DMatrix::from_fn(d, log.len(), |r, c| log[c].0[r]);
        let ys = DMatrix::from_fn(log.len(), l, |r, c| log[r].1[c]);
        let gram = &xs * xs.transpose() + DMatrix::identity(d, d) * self.prior;
        let moments = &xs * ys;
        Some((gram, moments))
    }

    /// Largest entrywise deviation between the recursive and batch states.
    pub fn batch_deviation(&self) -> Option<f64> {
        let (gram, moments) = self.batch()?;
        let dg = (&gram - &self.gram).amax();
        let dm = (&moments - &self.moments).amax();
        Some(dg.max(dm))
    }
}

/// Exploration-mixed estimator state, regularized by `I / 2`.
#[derive(Debug, Clone)]
pub struct MixedRegressionState {
    inner: Regression,
}

impl MixedRegressionState {
    pub const PRIOR: f64 = 0.5;

    pub fn new(dim: usize, n_objectives: usize) -> Self {
        Self {
            inner: Regression::new(dim, n_objectives, Self::PRIOR),
        }
    }

    pub fn with_log(self) -> Self {
        Self {
            inner: self.inner.with_log(),
        }
    }

    /// Add a raw exploration pair or a mixed pair.
    pub fn update(&mut self, context: &DVector<f64>, rewards: &[f64]) {
        self.inner.update(context, rewards);
    }

    pub fn solve(&self) -> Result<DMatrix<f64>, EstimatorError> {
        self.inner.solve()
    }

    pub fn regression(&self) -> &Regression {
        &self.inner
    }
}

/// DR-mix estimator state, regularized by `I`.
#[derive(Debug, Clone)]
pub struct DrMixState {
    inner: Regression,
    matched_rounds: usize,
}

impl DrMixState {
    pub const PRIOR: f64 = 1.0;

    pub fn new(dim: usize, n_objectives: usize) -> Self {
        Self {
            inner: Regression::new(dim, n_objectives, Self::PRIOR),
            matched_rounds: 0,
        }
    }

    pub fn with_log(self) -> Self {
        Self {
            inner: self.inner.with_log(),
            ..self
        }
    }

    /// Add the `d + 1` pseudo-contexts of one matched round with their
    /// pseudo-reward rows (`table` is `(d + 1) x L`).
    pub fn update(&mut self, contexts: &[DVector<f64>], table: &DMatrix<f64>) {
        debug_assert_eq!(contexts.len(), table.nrows());
        let mut row = vec![0.0; table.ncols()];
        for (i, x) in contexts.iter().enumerate() {
            for (l, value) in row.iter_mut().enumerate() {
                *value = table[(i, l)];
            }
            self.inner.update(x, &row);
        }
        self.matched_rounds += 1;
    }

    pub fn solve(&self) -> Result<DMatrix<f64>, EstimatorError> {
        self.inner.solve()
    }

    pub fn matched_rounds(&self) -> usize {
        self.matched_rounds
    }

    pub fn regression(&self) -> &Regression {
        &self.inner
    }
}

/// Ridge regression on the observed `(x_{a_s}, Y_s)` pairs, regularized by `I`.
#[derive(Debug, Clone)]
pub struct RidgeState {
    inner: Regression,
}

impl RidgeState {
    pub const PRIOR: f64 = 1.0;

    pub fn new(dim: usize, n_objectives: usize) -> Self {
        Self {
            inner: Regression::new(dim, n_objectives, Self::PRIOR),
        }
    }

    pub fn with_log(self) -> Self {
        Self {
            inner: self.inner.with_log(),
        }
    }

    pub fn update(&mut self, x: &DVector<f64>, rewards: &[f64]) {
        self.inner.update(x, rewards);
    }

    pub fn solve(&self) -> Result<DMatrix<f64>, EstimatorError> {
        self.inner.solve()
    }

    pub fn regression(&self) -> &Regression {
        &self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_states_solve_to_zero() {
        assert_eq!(MixedRegressionState::new(3, 2).solve().unwrap(), DMatrix::zeros(3, 2));
        assert_eq!(DrMixState::new(3, 2).solve().unwrap(), DMatrix::zeros(3, 2));
        assert_eq!(RidgeState::new(3, 2).solve().unwrap(), DMatrix::zeros(3, 2));
    }

    #[test]
    fn scalar_examples() {
        let one = DVector::from_element(1, 1.0);
        let mut mixed = MixedRegressionState::new(1, 1);
        mixed.update(&one, &[2.0]);
        assert!((mixed.solve().unwrap()[0] - 4.0 / 3.0).abs() < 1e-12);

        let mut ridge = RidgeState::new(1, 1);
        ridge.update(&one, &[3.0]);
        assert!((ridge.solve().unwrap()[0] - 1.5).abs() < 1e-12);

        let mut dr = DrMixState::new(1, 1);
        let table = DMatrix::from_column_slice(2, 1, &[0.4, 1.1]);
        dr.update(&[one.clone(), one], &table);
        assert!((dr.solve().unwrap()[0] - 1.5 / 3.0).abs() < 1e-12);
        assert_eq!(dr.matched_rounds(), 1);
    }

    #[test]
    fn recursion_matches_batch() {
        let mut reg = Regression::new(3, 2, 0.5).with_log();
        for s in 0..50 {
            let f = s as f64;
            let x = DVector::from_vec(vec![(f * 0.3).sin(), (f * 0.7).cos(), 0.1 * f.sqrt()]);
            reg.update(&x, &[f.cos(), -0.5 * f.sin()]);
        }
        assert!(reg.batch_deviation().unwrap() < 1e-8);
    }
}
