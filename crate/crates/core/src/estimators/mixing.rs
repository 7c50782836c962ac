use nalgebra::DVector;
use rand::Rng;

use crate::contexts::ContextSet;

const HALF_WIDTH: f64 = 1.732_050_807_568_877_2; // sqrt(3)

/// The pair `(w, w_check)` of mixing weights, each `unif[-sqrt 3, sqrt 3]`
/// (mean 0, variance 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixWeights {
    pub fresh: f64,
    pub recycled: f64,
}

impl MixWeights {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            fresh: rng.random_range(-HALF_WIDTH..=HALF_WIDTH),
            recycled: rng.random_range(-HALF_WIDTH..=HALF_WIDTH),
        }
    }
}

/// Mixed pair built from the fresh observation of `action` and a recycled
/// exploration sample of `recycled_arm` drawn for `basis`:
///
/// `X = w x_a + w' s_i u_i`,
/// `Y = w Y_a + w' ||v_i||_1 sign(v_{i, recycled_arm}) Y_recycled`.
pub fn mix_sample(
    contexts: &ContextSet,
    action: usize,
    fresh_reward: &[f64],
    basis: usize,
    recycled_arm: usize,
    recycled_reward: &[f64],
    weights: MixWeights,
) -> (DVector<f64>, Vec<f64>) {
    let x = contexts.context(action) * weights.fresh + contexts.basis_context(basis) * weights.recycled;
    let y = fresh_reward
        .iter()
        .zip(recycled_reward)
        .map(|(&fresh, &old)| {
            weights.fresh * fresh + weights.recycled * contexts.reward_reweight(basis, recycled_arm, old)
        })
        .collect();
    (x, y)
}
