//! Keyed random streams.
//!
//! Every consumer of randomness derives its own ChaCha8 generator from the
//! experiment seed plus a key path such as `(purpose, replication, period)`,
//! so results do not depend on the order in which streams are used.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const NOISE_POOL: u64 = 1;
pub const DEMAND: u64 = 2;
pub const SCENARIOS: u64 = 3;

/// SplitMix64 finaliser.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, key: &[u64]) -> ChaCha8Rng {
    let mut h = mix(seed);
    for &k in key {
        h = mix(h ^ mix(k));
    }
    ChaCha8Rng::seed_from_u64(h)
}
