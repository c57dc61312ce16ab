//! Seed derivation.
//!
//! Every random stream is keyed by `(seed, purpose tag, index)` and mixed with
//! SplitMix64, so the stream used by a work item never depends on which worker
//! runs it or in which order items complete.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over the tag bytes; stable across platforms and releases.
pub fn tag_hash(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// `mix(mix(mix(seed) ^ tag_hash(tag)) ^ index)`, with golden-ratio offsets
/// between rounds.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let a = mix64(seed.wrapping_add(GOLDEN));
    let b = mix64(a ^ tag_hash(tag).wrapping_add(GOLDEN));
    mix64(b ^ index.wrapping_mul(GOLDEN))
}

pub fn stream(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag, index))
}

/// Maps 64 random bits to `[0, 1)` at 53-bit resolution.
#[inline]
pub fn unit_from_bits(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
pub fn hash_u128(state: u64, x: u128) -> u64 {
    let lo = mix64(state ^ (x as u64));
    mix64(lo.wrapping_add(GOLDEN) ^ ((x >> 64) as u64))
}
