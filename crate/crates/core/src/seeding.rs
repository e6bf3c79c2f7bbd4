//! Seed splitting.
//!
//! All randomness in an experiment descends from one master seed:
//!
//! * `split_seed(master, estimator_index)` gives each estimator its own seed,
//! * `realization_rng(seed, index)` gives disorder realization `index` a
//!   ChaCha8 stream keyed by `(seed, index)`.
//!
//! Realizations therefore never share a generator, and the value drawn for a
//! given index does not depend on which worker thread produced it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a label.
pub fn split_seed(master: u64, label: u64) -> u64 {
    mix64(master.wrapping_add(0x9e37_79b9_7f4a_7c15_u64.wrapping_mul(label.wrapping_add(1))))
}

/// Generator for realization `index` under `seed`.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
