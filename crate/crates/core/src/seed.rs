//! Splittable seeding: every random draw in the toolkit descends from one
//! 64-bit root seed.
//!
//! Streams are derived by folding context words (scenario index, category
//! index, sample index, purpose tag) into the root through splitmix64 steps,
//! so any sub-stream can be reproduced in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One splitmix64 step.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a root seed and a list of context words.
pub fn derive(root: u64, words: &[u64]) -> u64 {
    let mut acc = splitmix64(root);
    for &w in words {
        acc = splitmix64(acc ^ w.wrapping_mul(0xD6E8_FEB8_6659_FD93));
    }
    acc
}

/// RNG for a derived stream.
pub fn rng(root: u64, words: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, words))
}

/// Stable tag values for purpose-separated streams.
pub mod tag {
    pub const CANDIDATE: u64 = 1;
    pub const RESHUFFLE: u64 = 2;
    pub const ORACLE_NOISE: u64 = 3;
    pub const SUBSAMPLE: u64 = 4;
}
