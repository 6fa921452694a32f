//! Counter-based pseudo-random bits.
//!
//! Every random quantity in this crate is a pure function of an explicit
//! key tuple, so regeneration is bitwise reproducible and independent
//! Monte Carlo trials can be evaluated in any order or in parallel without
//! shared state. The mixer is the SplitMix64 finalizer applied to a
//! combined key; distinct key tuples give statistically independent words.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64 pseudo-random bits keyed by `(seed, stream, counter)`.
///
/// `stream` separates logical substreams (pattern index, trial index) and
/// `counter` enumerates 64-bit blocks within a stream.
#[inline]
pub fn bits(seed: u64, stream: u64, counter: u64) -> u64 {
    let a = mix64(seed ^ GOLDEN.wrapping_mul(stream.wrapping_add(1)));
    mix64(a ^ counter.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Derives an independent 64-bit sub-seed, e.g. one per Monte Carlo trial.
#[inline]
pub fn subseed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}
