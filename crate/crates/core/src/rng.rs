//! Seed plumbing.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by a
//! 64-bit seed. Trials of one experiment share the master seed and use the
//! trial index as the ChaCha stream id, so lanes can run trials in any order
//! and still see the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for a single seed.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for trial `trial` of the experiment keyed by `master`.
pub fn trial_stream(master: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng
}

/// Derives an independent child seed (splitmix64 finaliser over `master ^ index`).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        ^ index
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
