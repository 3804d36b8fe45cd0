//! Seed derivation shared by every randomized component.
//!
//! Child seeds are a pure function of `(parent, index)`, so work can be
//! distributed over any number of threads and still reproduce bit-for-bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of the `index`-th child stream of `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix(mix(parent) ^ index.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
