//! Seeded randomness.
//!
//! Every random draw in the crate comes from a ChaCha8 stream seeded with a
//! `u64`. Worker seeds (per tree, per trial, per fold, ...) are derived from
//! the user-facing master seed with SplitMix64 over a `(stream, index)` pair
//! *before* any work is dispatched, so parallel and sequential schedules
//! consume identical streams and produce identical results. ChaCha8 is pinned
//! on purpose: it is a named, versioned algorithm, so another implementation
//! can reproduce the synthetic datasets bit-for-bit (or at least match the
//! distributions when the uniform/normal mappings differ).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags for derived seed streams. Distinct tags mean bootstrap draws
/// can never alias permutation draws under the same master seed.
pub(crate) mod stream {
    pub const TREE: u64 = 1;
    pub const BAG: u64 = 2;
    pub const STRAT: u64 = 3;
    pub const DROPCOL: u64 = 4;
    pub const SAMPLE: u64 = 5;
    pub const PERMUTE: u64 = 6;
    pub const FOLDS: u64 = 7;
    pub const EVAL: u64 = 8;
    pub const SYNTH: u64 = 9;
}

/// SplitMix64 finalizer: cheap, stable across platforms, good avalanche.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed for worker `idx` of `stream` under `master`.
pub fn derive_seed(master: u64, stream: u64, idx: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream ^ splitmix64(idx)))
}

/// The one RNG constructor used everywhere.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
