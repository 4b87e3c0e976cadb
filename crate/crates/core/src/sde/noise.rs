//! Counter-based Gaussian increments.
//!
//! Each trajectory owns an independent ChaCha stream selected by its index;
//! the key is derived from the run seed. Every step consumes exactly two
//! 64-bit words (one Box–Muller pair, cosine branch only), so the normal
//! variate of step `n` sits at a fixed position in the stream and can be
//! regenerated in isolation with [`NoiseStream::at_step`].

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const WORDS_PER_STEP: u128 = 4;

#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, trajectory: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory);
        Self { rng }
    }

    /// Positioned so the next draw is the one used by step `step`.
    pub fn at_step(seed: u64, trajectory: u64, step: u64) -> Self {
        let mut s = Self::new(seed, trajectory);
        s.rng.set_word_pos(step as u128 * WORDS_PER_STEP);
        s
    }

    /// A standard normal variate.
    pub fn standard_normal(&mut self) -> f64 {
        // u1 in (0, 1] keeps the logarithm finite.
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// A Wiener increment with variance `dt`.
    pub fn increment(&mut self, dt: f64) -> f64 {
        self.standard_normal() * dt.sqrt()
    }
}
