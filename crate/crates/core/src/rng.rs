//! Seed derivation and the per-agent draw protocol.
//!
//! Each run owns one SplitMix64 generator. Its seed is the `run_index`-th
//! output of a SplitMix64 stream started at `master_seed`:
//!
//! ```text
//! run_seed = mix(master_seed + (run_index + 1) · 0x9E3779B97F4A7C15)
//! ```
//!
//! so a run's randomness depends only on `(master_seed, run_index)` and
//! never on scheduling.
//!
//! Every agent consumes exactly two uniforms, in order: the signal draw and
//! the choice draw. The choice draw is taken even when the deterministic
//! rule does not need it, which keeps signal streams aligned across choice
//! modes for paired comparisons.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of run `run_index` under `master_seed`.
pub fn run_seed(master_seed: u64, run_index: u64) -> u64 {
    SplitMix64::seed_from_u64(master_seed.wrapping_add(run_index.wrapping_mul(GOLDEN_GAMMA)))
        .next_u64()
}

pub fn run_rng(seed: u64) -> SplitMix64 {
    SplitMix64::seed_from_u64(seed)
}

/// Source of the two uniforms each agent consumes.
pub trait DrawSource {
    fn signal_draw(&mut self) -> f64;
    fn choice_draw(&mut self) -> f64;
}

impl<R: Rng + ?Sized> DrawSource for R {
    fn signal_draw(&mut self) -> f64 {
        self.random()
    }

    fn choice_draw(&mut self) -> f64 {
        self.random()
    }
}
