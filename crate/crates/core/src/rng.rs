//! Reproducible random stream used by the simulator.
//!
//! The generator is xoshiro256++ seeded from a single `u64` through the
//! SplitMix64 expansion of `rand_xoshiro`. Its output sequence is fixed by
//! the algorithm, so a seed reproduces the same run on every platform.
//!
//! Bounded integers use Lemire's multiply-shift method with rejection, which
//! makes [`UrnRng::bernoulli_ratio`] an exact `B / S` coin. Each call to
//! either sampling method consumes at least one 64-bit output.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone)]
pub struct UrnRng {
    inner: Xoshiro256PlusPlus,
}

impl UrnRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `[0, bound)`. `bound` must be non-zero.
    #[inline]
    pub fn below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        let mut m = u128::from(self.next_u64()) * u128::from(bound);
        if (m as u64) < bound {
            let threshold = bound.wrapping_neg() % bound;
            while (m as u64) < threshold {
                m = u128::from(self.next_u64()) * u128::from(bound);
            }
        }
        (m >> 64) as u64
    }

    /// `true` with probability exactly `num / den`, `num <= den`, `den > 0`.
    #[inline]
    pub fn bernoulli_ratio(&mut self, num: u64, den: u64) -> bool {
        self.below(den) < num
    }

    /// Uniform `f64` in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `true` with probability `p`; `p = 0` never fires and `p = 1` always does.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit_f64() < p
    }
}
