//! Seed derivation.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by a 64-bit
//! seed derived from the master seed and a path of integers (config index,
//! run index, slot, ...). Substreams are therefore independent of scheduling
//! order and parallelism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a path of stream labels.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(seed), |acc, &p| mix64(acc ^ mix64(p.wrapping_add(GOLDEN_GAMMA))))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream labels, so that e.g. channel and noise draws for one slot never share a stream.
pub mod stream {
    pub const CONFIG: u64 = 1;
    pub const RUN: u64 = 2;
    pub const CHANNEL: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const SNR: u64 = 5;
    pub const SPLIT: u64 = 6;
    pub const MASK: u64 = 7;
}
