//! Reproducible random number generation.
//!
//! All Monte Carlo paths in this crate derive their generators from a single
//! 64-bit seed plus a stream counter, so independent trials (and parallel
//! workers) draw from disjoint, platform-stable streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The generator used everywhere in this crate.
pub type Rng = ChaCha12Rng;

/// Build the generator for a given `(seed, stream)` pair.
///
/// The same pair always yields the same sequence, on every platform; distinct
/// streams under one seed are independent. Trial `t` of a simulation uses
/// stream `t`, leaving the caller free to run trials in any order.
pub fn stream_rng(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derive a sub-seed for a named component (e.g. a per-layer dither) from a
/// master seed. SplitMix64 finalizer; cheap and well mixed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
