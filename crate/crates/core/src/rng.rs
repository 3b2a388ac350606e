//! Seeding helpers.
//!
//! Sketch entries come from a counter-based generator: entry `(i, j)` is a
//! pure function of `(seed, i, j)`, so matrices can be generated in any order
//! and the first `m` rows do not depend on how many rows are requested.
//! Everything else draws from a ChaCha stream seeded by a 64-bit value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based key for matrix entry `(row, col)` under `seed`.
#[inline]
pub(crate) fn entry_key(seed: u64, row: u64, col: u64) -> u64 {
    splitmix64(seed ^ splitmix64(row ^ splitmix64(col.wrapping_mul(GOLDEN) ^ 0xD6E8_FEB8_6659_FD93)))
}

/// Uniform in the half-open interval (0, 1].
#[inline]
pub(crate) fn unit_open_closed(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in [0, 1).
#[inline]
pub(crate) fn unit_closed_open(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal value derived from a counter key (Box-Muller, cosine branch).
#[inline]
pub(crate) fn gaussian_from_key(key: u64) -> f64 {
    let u1 = unit_open_closed(splitmix64(key));
    let u2 = unit_closed_open(splitmix64(key ^ GOLDEN));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Stream generator for samplers and experiments.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for an independent sub-stream, e.g. one trial of an experiment.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}
