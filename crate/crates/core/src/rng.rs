//! Deterministic random streams shared by the synthetic generator, fold
//! planning, permutations and bootstrap resampling.
//!
//! Every stream is ChaCha8 seeded through `SeedableRng::seed_from_u64`, so a
//! `(seed, index)` pair maps to the same sequence on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream for item `index` of a seeded family (`seed ^ index`).
pub fn substream(seed: u64, index: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed ^ index)
}
