//! Seeded 64-bit linear congruential generator used by every randomized suite.
//!
//! State update: `s <- 6364136223846793005 * s + 1442695040888963407 (mod 2^64)`
//! (Knuth's MMIX constants). A uniform double in `[0, 1)` is the top 53 bits of
//! the new state times `2^-53`. The sequence is fully specified by the seed so
//! any implementation of the same recurrence reproduces the same samples.

pub const MULTIPLIER: u64 = 6_364_136_223_846_793_005;
pub const INCREMENT: u64 = 1_442_695_040_888_963_407;

#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(MULTIPLIER)
            .wrapping_add(INCREMENT);
        self.state
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Independent stream derived from this seed and an index, for parallel fan-out.
    pub fn fork(seed: u64, index: u64) -> Self {
        let mut g = Self::new(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        g.next_u64();
        g
    }
}
