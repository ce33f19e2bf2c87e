//! Deterministic pseudo-random numbers.
//!
//! Every stochastic ingredient in the crate (test grids, dictionary fields,
//! power-iteration starting vectors) draws from this one generator, so a run
//! is reproducible bit-for-bit from its 64-bit seed. The algorithm is the
//! classic split-mix finalizer (Steele, Lea & Flood); it is carried inline
//! rather than through an RNG crate because external generators do not
//! promise stream stability across versions, and stability is part of this
//! crate's contract.

/// 64-bit-state generator with a fixed, documented update rule.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)` with 53 significant bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[-1, 1)`.
    pub fn next_signed(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }

    /// Uniform integer in `[0, bound)` via the widening-multiply trick
    /// (deterministic, no rejection loop).
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Fair coin as `+1.0` / `-1.0`.
    pub fn next_sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}
