//! Seed derivation.
//!
//! Every random stream in a run is derived from one master seed. A stream
//! seed is `mix(mix(seed ^ fnv1a(tag)) ^ index)` where `mix` is the
//! SplitMix64 finalizer and `fnv1a` is the 64-bit FNV-1a hash of the
//! purpose tag. Replica `i` of purpose `tag` always receives the same
//! stream regardless of how replicas are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Stream seed for replica `index` of purpose `tag`.
pub fn derive_seed(seed: u64, tag: &str, index: u64) -> u64 {
    mix(mix(seed ^ fnv1a(tag)) ^ index)
}

pub fn stream(seed: u64, tag: &str, index: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, tag, index))
}

/// Deterministic uniform in [0, 1) keyed by (seed, tag, index).
pub fn keyed_uniform(seed: u64, tag: &str, index: u64) -> f64 {
    (derive_seed(seed, tag, index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
