//! Per-replicate random streams.
//!
//! Replicate `i` of a run with master seed `s` always gets the same stream,
//! whatever order or thread it runs on. The replicate seed is a SplitMix64
//! hash of `(s, i)` and seeds a ChaCha8 generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ReplicateRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replicate `index` under `master_seed`.
pub fn replicate_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ index.wrapping_mul(GOLDEN_GAMMA))
}

pub fn replicate_rng(master_seed: u64, index: u64) -> (u64, ReplicateRng) {
    let seed = replicate_seed(master_seed, index);
    (seed, ChaCha8Rng::seed_from_u64(seed))
}

/// Seed of an independent sub-stream for a named purpose (pilot run, data
/// generation, one method of a benchmark, ...). Never collides with
/// replicate streams in practice.
pub fn purpose_seed(master_seed: u64, purpose: &str) -> u64 {
    let tag = purpose.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    splitmix64(master_seed ^ splitmix64(tag))
}

pub fn purpose_rng(master_seed: u64, purpose: &str) -> ReplicateRng {
    ChaCha8Rng::seed_from_u64(purpose_seed(master_seed, purpose))
}
