//! Deterministic per-row RNG streams. Every renderer seeds one ChaCha stream
//! per (scenario seed, stream tag, frame, row) and consumes one draw per
//! pixel, so frames are bit-identical for a given seed and independent of
//! render order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_TOF_PATTERN: u64 = 0x01;
pub const STREAM_TOF_FRAME: u64 = 0x02;
pub const STREAM_LEARNED: u64 = 0x03;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a list of components into one seed.
pub fn mix(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x243F_6A88_85A3_08D3;
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

pub fn stream(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(parts))
}
