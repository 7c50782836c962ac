//! Dominance, the `m`/`M` gap functions, required accuracies and the
//! closed-form diagnostic bounds.
//!
//! Arms are indexed from 0. A mean table is a slice of per-arm reward vectors
//! of common length `L`.

use crate::error::ParetoError;

fn check_len(a: &[f64], b: &[f64]) -> Result<(), ParetoError> {
    if a.len() != b.len() {
        Err(ParetoError::LengthMismatch(a.len(), b.len()))
    } else {
        Ok(())
    }
}

/// Amount by which `y_j` dominates `y_k`: `max{0, min_l (y_j - y_k)}`.
pub fn m_gap(y_k: &[f64], y_j: &[f64]) -> Result<f64, ParetoError> {
    check_len(y_k, y_j)?;
    Ok(m_gap_unchecked(y_k, y_j))
}

/// Uniform lift of `y_j` so that `y_k` is weakly dominated:
/// `max{0, max_l (y_k - y_j)}`.
#[allow(non_snake_case)]
pub fn M_gap(y_k: &[f64], y_j: &[f64]) -> Result<f64, ParetoError> {
    check_len(y_k, y_j)?;
    Ok(big_m_gap_unchecked(y_k, y_j, 0.0))
}

pub(crate) fn m_gap_unchecked(y_k: &[f64], y_j: &[f64]) -> f64 {
    let min = y_k
        .iter()
        .zip(y_j)
        .map(|(a, b)| b - a)
        .fold(f64::INFINITY, f64::min);
    min.max(0.0)
}

/// `max{0, max_l (y_k + shift - y_j)}`.
pub(crate) fn big_m_gap_unchecked(y_k: &[f64], y_j: &[f64], shift: f64) -> f64 {
    let max = y_k
        .iter()
        .zip(y_j)
        .map(|(a, b)| a + shift - b)
        .fold(f64::NEG_INFINITY, f64::max);
    max.max(0.0)
}

/// `a ≺ b`: `b` is at least `a` everywhere and strictly larger somewhere.
pub fn dominated_by(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Arms whose mean vector is not strictly dominated by any other arm.
pub fn pareto_front(means: &[Vec<f64>]) -> Vec<usize> {
    (0..means.len())
        .filter(|&k| !means.iter().any(|other| dominated_by(&means[k], other)))
        .collect()
}

/// Per-arm sub-optimality and required accuracies.
///
/// `delta_plus` / `delta_minus` are `None` off the front. A minimum over an
/// empty index set is `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapProfile {
    pub delta_star: Vec<f64>,
    pub delta_plus: Vec<Option<f64>>,
    pub delta_minus: Vec<Option<f64>>,
    pub delta: Vec<f64>,
    pub pareto_front: Vec<usize>,
    /// Set when some arm has a zero required accuracy (tied mean vectors).
    pub degenerate: bool,
}

impl GapProfile {
    pub fn is_pareto(&self, arm: usize) -> bool {
        self.pareto_front.binary_search(&arm).is_ok()
    }

    /// Required accuracies in increasing order.
    pub fn sorted_deltas(&self) -> Vec<f64> {
        let mut sorted = self.delta.clone();
        sorted.sort_by(f64::total_cmp);
        sorted
    }

    /// `max{eps, min_{k not in P*} delta*_k}`; `+inf` without suboptimal arms.
    pub fn min_suboptimal_gap(&self, epsilon: f64) -> f64 {
        let min = (0..self.delta_star.len())
            .filter(|&k| !self.is_pareto(k))
            .map(|k| self.delta_star[k])
            .fold(f64::INFINITY, f64::min);
        min.max(epsilon)
    }
}

pub fn gap_profile(means: &[Vec<f64>]) -> Result<GapProfile, ParetoError> {
    if means.is_empty() {
        return Err(ParetoError::Empty);
    }
    let len = means[0].len();
    for row in means {
        check_len(&means[0], row).map_err(|_| ParetoError::LengthMismatch(len, row.len()))?;
    }
    let n_arms = means.len();
    let front = pareto_front(means);
    let on_front = |k: usize| front.binary_search(&k).is_ok();

    let delta_star: Vec<f64> = (0..n_arms)
        .map(|k| {
            front
                .iter()
                .map(|&p| m_gap_unchecked(&means[k], &means[p]))
                .fold(0.0, f64::max)
        })
        .collect();

    let mut delta_plus = vec![None; n_arms];
    let mut delta_minus = vec![None; n_arms];
    let mut delta = delta_star.clone();
    for &k in &front {
        let plus = front
            .iter()
            .filter(|&&j| j != k)
            .map(|&j| {
                big_m_gap_unchecked(&means[k], &means[j], 0.0)
                    .min(big_m_gap_unchecked(&means[j], &means[k], 0.0))
            })
            .fold(f64::INFINITY, f64::min);
        let minus = (0..n_arms)
            .filter(|&j| !on_front(j))
            .map(|j| big_m_gap_unchecked(&means[j], &means[k], 0.0) + delta_star[j])
            .fold(f64::INFINITY, f64::min);
        delta_plus[k] = Some(plus);
        delta_minus[k] = Some(minus);
        delta[k] = plus.min(minus);
    }
    let degenerate = delta.iter().any(|&d| d == 0.0);

    Ok(GapProfile {
        delta_star,
        delta_plus,
        delta_minus,
        delta,
        pareto_front: front,
        degenerate,
    })
}

/// Instantaneous Pareto regret of playing `arm`.
pub fn pareto_regret(profile: &GapProfile, arm: usize) -> f64 {
    profile.delta_star[arm]
}

/// The identification success condition: the output contains the whole front
/// and every extra arm is within `epsilon` of it.
pub fn success_check(output: &[usize], profile: &GapProfile, epsilon: f64) -> bool {
    let covers = profile
        .pareto_front
        .iter()
        .all(|p| output.contains(p));
    let near = output
        .iter()
        .filter(|&&k| !profile.is_pareto(k))
        .all(|&k| profile.delta_star[k] <= epsilon);
    covers && near
}

/// Sample-complexity lower bound
/// `(sigma^2 / 3) * sum_{k<=d} max(Delta_(k), eps)^-2 * log(3L / 4 delta)`.
pub fn sample_lower_bound(
    profile: &GapProfile,
    sigma: f64,
    n_objectives: usize,
    delta: f64,
    epsilon: f64,
    dim: usize,
) -> f64 {
    let sum: f64 = profile
        .sorted_deltas()
        .into_iter()
        .take(dim)
        .map(|g| g.max(epsilon).powi(-2))
        .sum();
    sigma * sigma / 3.0 * sum * (3.0 * n_objectives as f64 / (4.0 * delta)).ln()
}

/// Regret lower bound `sqrt(3) d sigma / (8 Delta*_eps) * log(1 / 4 delta)`.
pub fn regret_lower_bound(min_gap: f64, sigma: f64, dim: usize, delta: f64) -> f64 {
    3f64.sqrt() * dim as f64 * sigma / (8.0 * min_gap) * (1.0 / (4.0 * delta)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_examples() {
        assert_eq!(m_gap(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(m_gap(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(M_gap(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(M_gap(&[0.0, 0.5], &[0.2, 0.5]).unwrap(), 0.0);
        assert_eq!(
            m_gap(&[0.0], &[1.0, 2.0]),
            Err(ParetoError::LengthMismatch(1, 2))
        );
    }

    #[test]
    fn front_examples() {
        let means = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5], vec![0.0, 0.0]];
        assert_eq!(pareto_front(&means), vec![0, 1, 2]);
        let ties = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]];
        assert_eq!(pareto_front(&ties), vec![0, 1]);
    }

    #[test]
    fn mab_instance_profile() {
        let means = vec![vec![1.0], vec![-1.0], vec![-1.0]];
        let p = gap_profile(&means).unwrap();
        assert_eq!(p.pareto_front, vec![0]);
        assert_eq!(p.delta_star, vec![0.0, 2.0, 2.0]);
        assert_eq!(p.delta, vec![2.0, 2.0, 2.0]);
        assert_eq!(p.delta_plus[0], Some(f64::INFINITY));
        assert_eq!(p.delta_minus[0], Some(2.0));
        assert_eq!(pareto_regret(&p, 1), 2.0);
        assert_eq!(pareto_regret(&p, 0), 0.0);
    }

    #[test]
    fn two_point_front_profile() {
        let p = gap_profile(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(p.delta_plus, vec![Some(1.0), Some(1.0)]);
        assert_eq!(p.delta_minus, vec![Some(f64::INFINITY), Some(f64::INFINITY)]);
        assert_eq!(p.delta, vec![1.0, 1.0]);
        assert!(!p.degenerate);
    }

    #[test]
    fn identical_arms_are_degenerate() {
        let p = gap_profile(&[vec![0.3, 0.3], vec![0.3, 0.3], vec![0.3, 0.3]]).unwrap();
        assert_eq!(p.pareto_front, vec![0, 1, 2]);
        assert!(p.delta.iter().all(|&d| d == 0.0));
        assert!(p.degenerate);
    }

    #[test]
    fn success_examples() {
        // arm 2 sits 0.05 below arm 0 in every component
        let means = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.95, -0.05], vec![-1.0, -1.0]];
        let p = gap_profile(&means).unwrap();
        assert!((p.delta_star[2] - 0.05).abs() < 1e-12);
        assert!(success_check(&[0, 1], &p, 1e-6));
        assert!(!success_check(&[0], &p, 10.0));
        assert!(success_check(&[0, 1, 2], &p, 0.06));
        assert!(!success_check(&[0, 1, 2], &p, 0.04));
    }

    #[test]
    fn bound_examples() {
        let p = GapProfile {
            delta_star: vec![0.0; 2],
            delta_plus: vec![None; 2],
            delta_minus: vec![None; 2],
            delta: vec![0.5, 0.5],
            pareto_front: vec![0, 1],
            degenerate: false,
        };
        let b = sample_lower_bound(&p, 1.0, 2, 0.1, 0.01, 2);
        assert!((b - 8.0 / 3.0 * 15f64.ln()).abs() < 1e-12);
        assert!((b - 7.2214).abs() < 1e-3);
        // clamp by epsilon everywhere
        let clamped = sample_lower_bound(&p, 1.0, 2, 0.1, 2.0, 2);
        assert!((clamped - 2.0 / 4.0 / 3.0 * 15f64.ln()).abs() < 1e-12);
        let doubled = sample_lower_bound(&p, 2.0, 2, 0.1, 0.01, 2);
        assert!((doubled / b - 4.0).abs() < 1e-12);

        let e = std::f64::consts::E;
        assert!((regret_lower_bound(1.0, 1.0, 1, 1.0 / (4.0 * e)) - 3f64.sqrt() / 8.0).abs() < 1e-12);
        let r = regret_lower_bound(0.06, 0.1, 3, 0.1);
        assert!((r - 0.9920).abs() < 1e-3);
        assert!((regret_lower_bound(0.03, 0.1, 3, 0.1) / r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn mab_sample_bound_matches_hand_value() {
        let p = gap_profile(&[vec![1.0], vec![-1.0], vec![-1.0]]).unwrap();
        let b = sample_lower_bound(&p, 0.1, 1, 0.1, 0.5, 3);
        assert!((b - 0.01 / 3.0 * 0.75 * 7.5f64.ln()).abs() < 1e-15);
        assert!((b - 0.00504).abs() < 1e-5);
    }
}
