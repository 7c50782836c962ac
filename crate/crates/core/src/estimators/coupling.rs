use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::contexts::ContextSet;

/// `pi_i = 1/(2d)` for the basis slots `0..d`, `1/2` for the played-action
/// slot `d`.
pub fn pseudo_action_prob(dim: usize, slot: usize) -> f64 {
    if slot == dim {
        0.5
    } else {
        0.5 / dim as f64
    }
}

/// Draw a pseudo-action slot in `0..=d`; slot `d` is the played action.
pub fn draw_pseudo_action<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> usize {
    if rng.random_bool(0.5) {
        dim
    } else {
        rng.random_range(0..dim)
    }
}

/// `ceil(ln((t+1)^2 / delta') / ln 2)`, at least one attempt.
pub fn resampling_budget(t: usize, delta_prime: f64) -> usize {
    let t1 = (t + 1) as f64;
    let rho = ((t1 * t1) / delta_prime).log2();
    (rho.ceil().max(1.0)) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchOutcome {
    pub matched: bool,
    /// Played action of the final attempt.
    pub action: usize,
    /// Pseudo-action slot of the final attempt.
    pub pseudo_action: usize,
    pub attempts: usize,
}

/// Jointly redraw `(a_t, pseudo-action)` until the pseudo-action lands on the
/// played-action slot or the budget for round `t` runs out. `policy` yields
/// a fresh `a_t` for each attempt.
pub fn resample_until_match<R, F>(
    mut policy: F,
    dim: usize,
    t: usize,
    delta_prime: f64,
    rng: &mut R,
) -> MatchOutcome
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> usize,
{
    let budget = resampling_budget(t, delta_prime);
    let mut outcome = MatchOutcome {
        matched: false,
        action: 0,
        pseudo_action: 0,
        attempts: 0,
    };
    for attempt in 1..=budget {
        let action = policy(rng);
        let pseudo_action = draw_pseudo_action(dim, rng);
        outcome = MatchOutcome {
            matched: pseudo_action == dim,
            action,
            pseudo_action,
            attempts: attempt,
        };
        if outcome.matched {
            break;
        }
    }
    outcome
}

/// The `d + 1` pseudo-contexts: the scaled basis contexts followed by the
/// played context.
pub fn pseudo_contexts(contexts: &ContextSet, action: usize) -> Vec<DVector<f64>> {
    let mut out = contexts.basis_contexts().to_vec();
    out.push(contexts.context(action).clone());
    out
}

/// Pseudo-reward table (`(d + 1) x L`):
/// `Y_i = x_i^T theta + 1(slot = i) / pi_i * (Y_obs - x_i^T theta)`.
///
/// `imputation` is the `d x L` parameter used to impute unobserved rows.
pub fn pseudo_rewards(
    imputation: &DMatrix<f64>,
    contexts: &[DVector<f64>],
    pseudo_action: usize,
    observed: &[f64],
) -> DMatrix<f64> {
    let dim = contexts.len() - 1;
    let n_obj = imputation.ncols();
    let mut table = DMatrix::zeros(contexts.len(), n_obj);
    for (i, x) in contexts.iter().enumerate() {
        for l in 0..n_obj {
            let fitted = x.dot(&imputation.column(l));
            table[(i, l)] = if i == pseudo_action {
                fitted + (observed[l] - fitted) / pseudo_action_prob(dim, i)
            } else {
                fitted
            };
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn probabilities_sum_to_one() {
        for d in 1..20 {
            let total: f64 = (0..=d).map(|i| pseudo_action_prob(d, i)).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert_eq!(pseudo_action_prob(1, 0), 0.5);
        assert_eq!(pseudo_action_prob(1, 1), 0.5);
    }

    #[test]
    fn pseudo_action_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[draw_pseudo_action(3, &mut rng)] += 1;
        }
        let expected = [1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.5];
        for (c, e) in counts.iter().zip(expected) {
            assert!((*c as f64 / n as f64 - e).abs() < 0.01);
        }
    }

    #[test]
    fn budget_example() {
        assert_eq!(resampling_budget(9, 0.1), 10);
        assert_eq!(resampling_budget(0, 1.0), 1);
    }

    #[test]
    fn failure_rate_matches_geometric_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        // t = 9, delta' = 0.1 gives ten attempts
        let failures = (0..n)
            .filter(|_| !resample_until_match(|_| 0, 3, 9, 0.1, &mut rng).matched)
            .count();
        let p = 2f64.powi(-10);
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((failures as f64 / n as f64) <= p + 3.0 * sd);
    }

    #[test]
    fn plug_in_rows() {
        let cs = ContextSet::euclidean(2);
        let xs = pseudo_contexts(&cs, 1);
        let table = pseudo_rewards(&DMatrix::zeros(2, 1), &xs, 2, &[0.7]);
        assert_eq!(table.column(0).as_slice(), &[0.0, 0.0, 1.4]);
        let theta = DMatrix::from_column_slice(2, 1, &[0.2, -0.3]);
        let table = pseudo_rewards(&theta, &xs, 2, &[-0.3]);
        assert!((table[(0, 0)] - 0.2).abs() < 1e-12);
        assert!((table[(1, 0)] + 0.3).abs() < 1e-12);
        assert!((table[(2, 0)] + 0.3).abs() < 1e-12);
    }
}
