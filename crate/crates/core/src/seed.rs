//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by a `u64`.
//! Child seeds are derived from a parent with SplitMix64 so that a single
//! master seed reproduces an entire experiment, and any one trial can be
//! regenerated from its own recorded seed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name of the generator, recorded in experiment metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3), seeded via seed_from_u64";

/// One SplitMix64 output step.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `stream` of `parent`.
pub fn derive(parent: u64, stream: u64) -> u64 {
    splitmix64(parent ^ splitmix64(stream))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
