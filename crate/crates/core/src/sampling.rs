//! Seeded sampling helpers. Every random draw in the crate goes through a
//! ChaCha8 generator seeded from a `u64`, so results are reproducible across
//! platforms.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::space::{RegionSpec, Vector};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal draw (Box–Muller).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

pub fn normal_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| standard_normal(rng)).collect()
}

/// Uniform point in the `dim`-ball of the given radius around the origin.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let g = normal_vector(rng, dim);
        let n = crate::linalg::norm2(&g);
        if n == 0.0 {
            continue;
        }
        let r = radius * libm::pow(rng.gen::<f64>(), 1.0 / dim as f64);
        return g.iter().map(|v| v * r / n).collect();
    }
}

/// Uniform point in the region.
pub fn uniform_in_region<R: Rng + ?Sized>(rng: &mut R, region: &RegionSpec) -> Vector {
    match region {
        RegionSpec::Ball { center, radius } => {
            let off = uniform_in_ball(rng, center.dim(), *radius);
            Vector::from_raw(center.as_slice().iter().zip(&off).map(|(c, o)| c + o).collect())
        }
        RegionSpec::Box { center, halfwidths } => Vector::from_raw(
            center
                .as_slice()
                .iter()
                .zip(halfwidths)
                .map(|(c, h)| c + rng.gen_range(-1.0..=1.0) * h)
                .collect(),
        ),
    }
}
