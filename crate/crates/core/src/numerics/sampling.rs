//! Seeded random sources for reproducible multistart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A seeded generator. Identical seeds yield identical streams.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child source for the `index`-th parallel worker.
    ///
    /// The child seed is `splitmix64(seed ^ splitmix64(index))`, so it depends
    /// only on the master seed and the index, never on draw order.
    pub fn split(&self, index: u64) -> Self {
        Self::new(splitmix64(self.seed ^ splitmix64(index)))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..=hi)
    }
}

/// The SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws a point with independent components uniform on `[-radius, radius]`.
pub fn sample_linf_ball(rng: &mut RandomSource, dim: usize, radius: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.uniform(-radius, radius)).collect()
}
