//! Seeded randomness. Every stochastic step in the crate draws from a
//! `Pcg64Mcg` so that a seed fully determines the outcome.

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use rand_pcg::Pcg64Mcg;

use crate::tensor::{Matrix, Tensor4};

pub type SeededRng = Pcg64Mcg;

pub fn seeded(seed: u64) -> SeededRng {
    Pcg64Mcg::seed_from_u64(seed)
}

/// Independent stream for item `index` under a master seed (splitmix64 mix).
pub fn derived(seed: u64, index: u64) -> SeededRng {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    seeded(z ^ (z >> 31))
}

pub fn fill_normal(values: &mut [f64], std: f64, rng: &mut SeededRng) {
    let dist = Normal::new(0.0, std).expect("finite, non-negative std");
    for v in values {
        *v = dist.sample(rng);
    }
}

pub fn uniform_tensor(dims: [usize; 4], lo: f64, hi: f64, rng: &mut SeededRng) -> Tensor4 {
    Tensor4::from_fn(dims, |_| rng.random_range(lo..hi))
}

pub fn uniform_matrix(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut SeededRng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect();
    Matrix::from_vec(rows, cols, data).expect("length matches")
}
