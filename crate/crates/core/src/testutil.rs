//! Finite-difference oracle and random fixtures shared by unit tests.

use crate::rng;
use crate::tensor::{Matrix, Tensor4};

pub const FD_STEP: f64 = 1e-5;
pub const REL_TOL: f64 = 1e-4;
pub const ABS_FLOOR: f64 = 1e-7;

pub fn random_tensor(dims: [usize; 4], seed: u64) -> Tensor4 {
    rng::uniform_tensor(dims, -1.0, 1.0, &mut rng::seeded(seed))
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    rng::uniform_matrix(rows, cols, -1.0, 1.0, &mut rng::seeded(seed))
}

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn finite_diff(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + FD_STEP;
            let up = f(&probe);
            probe[i] = x[i] - FD_STEP;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

pub fn check_close(analytic: &[f64], numeric: &[f64], what: &str) {
    assert_eq!(analytic.len(), numeric.len(), "{what}: length mismatch");
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        let diff = (a - n).abs();
        if diff <= ABS_FLOOR {
            continue;
        }
        let rel = diff / a.abs().max(n.abs());
        assert!(rel < REL_TOL, "{what}[{i}]: analytic {a} vs numeric {n} (rel {rel:e})");
    }
}
