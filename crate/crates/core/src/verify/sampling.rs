use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::config::NumericConfig;
use crate::distribution::DiscreteDistribution;

/// Seeded source of random interior distributions.
///
/// Draws are symmetric Dirichlet(2), floored at `10 · interior_floor` and
/// renormalized. Two samplers built from the same seed and stream produce the
/// same sequence on every platform.
pub struct InteriorSampler {
    rng: ChaCha8Rng,
    gamma: Gamma<f64>,
    floor: f64,
}

impl InteriorSampler {
    pub fn new(seed: u64, stream: u64, cfg: &NumericConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, gamma: Gamma::new(2.0, 1.0).expect("valid Gamma parameters"), floor: 10.0 * cfg.interior_floor }
    }

    /// Dirichlet(2) weights on `n` atoms, without flooring.
    pub fn weights(&mut self, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n).map(|_| self.gamma.sample(&mut self.rng)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    }

    pub fn interior(&mut self, n: usize) -> DiscreteDistribution {
        let floored: Vec<f64> = self.weights(n).into_iter().map(|x| x.max(self.floor)).collect();
        let total: f64 = floored.iter().sum();
        DiscreteDistribution::from_solver(
            floored.into_iter().map(|x| x / total).collect(),
            (0..n).map(|i| i as f64).collect(),
        )
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Standard normal vector of length `n`.
    pub fn direction(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.rng.sample(rand_distr::StandardNormal)).collect()
    }
}
