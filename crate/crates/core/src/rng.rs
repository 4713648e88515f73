//! Seed derivation and per-index random streams.
//!
//! Every randomized routine in this crate takes a 64-bit seed and derives
//! independent ChaCha streams from it. Replicate `b`, trial `i`, and so on
//! each get `stream_rng(seed, index)`, so results do not depend on the order
//! in which parallel work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Purpose tags used when one seed has to feed several unrelated consumers.
pub mod tag {
    pub const TRAINING: u64 = 1;
    pub const CALIBRATION: u64 = 2;
    pub const TRIALS: u64 = 3;
    pub const BASELINE: u64 = 4;
}

/// Mixes `(seed, tag)` into a fresh 64-bit seed (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for stream `stream` of the family keyed by `seed`.
///
/// Distinct streams of the same seed are independent ChaCha counters, so a
/// replicate's draws are identical whether it runs first, last, or in
/// parallel with the others.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
