//! Deterministic seeding primitives.
//!
//! Every randomized piece of the toolkit (green-list permutations, sampling,
//! per-purpose seed streams) bottoms out in the SplitMix64 generator and the
//! finalizer below, with the constants pinned here so outputs are bit-identical
//! across platforms and re-implementations.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; bijective on `u64`.
///
/// `mix64(z) = xorshift31(xorshift27(xorshift30(z) * 0xbf58476d1ce4e5b9)
///             * 0x94d049bb133111eb)`
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over bytes; folds purpose tags into seeds.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives an independent seed from `(master, tag, index)`:
/// `mix64(mix64(master ^ fnv1a64(tag)) ^ mix64(index ^ GOLDEN_GAMMA))`.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    mix64(mix64(master ^ fnv1a64(tag.as_bytes())) ^ mix64(index ^ GOLDEN_GAMMA))
}

/// SplitMix64 sequence generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `0..n`. Panics if `n == 0`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below needs n > 0");
        self.next_u64() % n
    }
}
