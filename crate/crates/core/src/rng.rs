//! Seeded random streams.
//!
//! All randomness in the crate comes from ChaCha8 keyed by a 64-bit seed, with
//! the ChaCha stream id separating independent consumers of the same seed.
//! ChaCha output is specified bit-for-bit, so draws do not depend on the host.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const STREAM_SUBSAMPLE: u64 = 1;
pub const STREAM_MEAN_SHIFT: u64 = 2;
pub const STREAM_POSE: u64 = 3;
pub const STREAM_OFFSET_NOISE: u64 = 4;
pub const STREAM_LABEL_FLIP: u64 = 5;
pub const STREAM_OCCLUSION: u64 = 6;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a per-item seed from a master seed (splitmix64 finalizer).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
