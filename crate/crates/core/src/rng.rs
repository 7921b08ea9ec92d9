//! Seed derivation and the small amount of randomness the simulators need.
//!
//! Streams are SplitMix64 keyed by a SHA-256 digest of `(seed, key)`, so a
//! sample's randomness does not depend on processing order or platform hash
//! seeds.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use sha2::{Digest, Sha256};

use crate::mask::PixelCoord;

pub type SimRng = SplitMix64;

/// Mixes a 64-bit seed with a text key into a new seed.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub fn rng_for(seed: u64, key: &str) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, key))
}

/// Two independent standard normal draws (Box-Muller), always consuming
/// exactly two uniforms.
pub fn standard_normal_pair(rng: &mut SimRng) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// `p` plus rounded isotropic Gaussian noise, clamped to the grid.
pub fn jitter_point(
    rng: &mut SimRng,
    p: PixelCoord,
    sigma: f64,
    width: usize,
    height: usize,
) -> PixelCoord {
    let (zx, zy) = standard_normal_pair(rng);
    let shift = |v: usize, z: f64, extent: usize| {
        let moved = v as i64 + (z * sigma).round() as i64;
        moved.clamp(0, extent as i64 - 1) as usize
    };
    PixelCoord::new(shift(p.x, zx, width), shift(p.y, zy, height))
}

/// Uniform integer in `[-halfwidth, halfwidth]`.
pub fn uniform_offset(rng: &mut SimRng, halfwidth: u32) -> i64 {
    let h = i64::from(halfwidth);
    rng.gen_range(-h..=h)
}
