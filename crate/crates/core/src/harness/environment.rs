use std::sync::Arc;

use rand::Rng;

use crate::contexts::ContextSet;
use crate::environments::{ClusteredEnvironment, LinearEnvironment, RewardSource};

/// Any environment the harness can build from a config.
#[derive(Debug, Clone)]
pub enum Environment {
    Linear(LinearEnvironment),
    Clustered(ClusteredEnvironment),
}

impl Environment {
    pub fn contexts(&self) -> Arc<ContextSet> {
        match self {
            Environment::Linear(env) => Arc::clone(env.contexts()),
            Environment::Clustered(env) => env.contexts(),
        }
    }

    /// Parameter-norm bound of the true model.
    pub fn theta_max(&self) -> f64 {
        match self {
            Environment::Linear(env) => env.model().theta_max(),
            Environment::Clustered(env) => env.theta_max(),
        }
    }

    /// Noise scale: `sigma` of the linear model, or the bounded deviation of
    /// cluster members from their means.
    pub fn noise_scale(&self) -> f64 {
        match self {
            Environment::Linear(env) => env.model().sigma(),
            Environment::Clustered(env) => env.subgaussian_scale(),
        }
    }
}

impl RewardSource for Environment {
    fn n_arms(&self) -> usize {
        match self {
            Environment::Linear(env) => env.n_arms(),
            Environment::Clustered(env) => env.n_arms(),
        }
    }

    fn n_objectives(&self) -> usize {
        match self {
            Environment::Linear(env) => env.n_objectives(),
            Environment::Clustered(env) => env.n_objectives(),
        }
    }

    fn means(&self) -> &[Vec<f64>] {
        match self {
            Environment::Linear(env) => env.means(),
            Environment::Clustered(env) => env.means(),
        }
    }

    fn pull<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Vec<f64> {
        match self {
            Environment::Linear(env) => env.pull(arm, rng),
            Environment::Clustered(env) => env.pull(arm, rng),
        }
    }
}
