//! Counter-based random draws keyed by (seed, stream, frame, pixel, draw).
//!
//! Every draw is a pure hash of its coordinates, so frames can be generated
//! in any order or in parallel and still come out bit-identical.

use std::f64::consts::TAU;

/// Stream tag for the fixed per-pixel response-nonuniformity pattern.
pub const STREAM_PRNU: u64 = 0x5052_4e55; // "PRNU"
/// Stream tag for per-frame temporal noise.
pub const STREAM_FRAME: u64 = 0x4652_414d; // "FRAM"

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash the draw coordinates into 64 uniform bits.
pub fn bits(seed: u64, stream: u64, frame: u64, pixel: u64, draw: u64) -> u64 {
    let mut h = splitmix(seed);
    h = splitmix(h ^ stream);
    h = splitmix(h ^ frame);
    h = splitmix(h ^ pixel);
    splitmix(h ^ draw)
}

/// Uniform double in the open interval (0, 1).
pub fn uniform(seed: u64, stream: u64, frame: u64, pixel: u64, draw: u64) -> f64 {
    ((bits(seed, stream, frame, pixel, draw) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Pair of independent standard normals (Box-Muller from draws `draw` and `draw + 1`).
pub fn normal_pair(seed: u64, stream: u64, frame: u64, pixel: u64, draw: u64) -> (f64, f64) {
    let u1 = uniform(seed, stream, frame, pixel, draw);
    let u2 = uniform(seed, stream, frame, pixel, draw + 1);
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = TAU * u2;
    (r * theta.cos(), r * theta.sin())
}
