//! Counter-based seed derivation.
//!
//! Every random stream in the engine is seeded from one master seed and a
//! path of integers `(stream, index..., purpose)`. Seeds depend only on the
//! path, never on scheduling, so parallel and serial runs draw identical
//! numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

pub const STREAM_EVOLUTION: u64 = 1;
pub const STREAM_SAMPLER: u64 = 2;

pub const PURPOSE_CIRCUIT: u64 = 1;
pub const PURPOSE_SHOTS: u64 = 2;
pub const PURPOSE_NOISE: u64 = 3;
pub const PURPOSE_PROPOSALS: u64 = 4;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a path of integers into a 64-bit seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut h = splitmix64(master);
    for &p in path {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019)));
    }
    h
}

pub fn stream(master: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, path))
}
