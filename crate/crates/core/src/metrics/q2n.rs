//! Q2n: the universal image quality index generalised to multiband images by
//! treating each pixel spectrum as a 2^m-dimensional hypercomplex number
//! (Cayley–Dickson algebra), evaluated on non-overlapping blocks.

use super::{check_same, MetricConfig};
use crate::error::{Error, Result};
use crate::tensor::Tensor4;

/// Element of the Cayley–Dickson algebra of dimension `len` (a power of two).
#[derive(Debug, Clone, PartialEq)]
pub struct Hypercomplex(pub Vec<f64>);

fn conj_into(a: &[f64], out: &mut [f64]) {
    out[0] = a[0];
    for (o, v) in out[1..].iter_mut().zip(&a[1..]) {
        *o = -v;
    }
}

/// (a1, a2)(b1, b2) = (a1·b1 − b2*·a2, b2·a1 + a2·b1*)
fn cd_mul(a: &[f64], b: &[f64], out: &mut [f64]) {
    let n = a.len();
    if n == 1 {
        out[0] = a[0] * b[0];
        return;
    }
    let h = n / 2;
    let (a1, a2) = a.split_at(h);
    let (b1, b2) = b.split_at(h);
    let mut cb = vec![0.0; h];
    let mut t = vec![0.0; h];

    cd_mul(a1, b1, &mut out[..h]);
    conj_into(b2, &mut cb);
    cd_mul(&cb, a2, &mut t);
    out[..h].iter_mut().zip(&t).for_each(|(o, v)| *o -= v);

    cd_mul(b2, a1, &mut out[h..]);
    conj_into(b1, &mut cb);
    cd_mul(a2, &cb, &mut t);
    out[h..].iter_mut().zip(&t).for_each(|(o, v)| *o += v);
}

impl Hypercomplex {
    pub fn zero(dim: usize) -> Self {
        assert!(dim.is_power_of_two(), "hypercomplex dimension must be a power of two");
        Hypercomplex(vec![0.0; dim])
    }

    /// Pads `values` with zeros up to the next power of two.
    pub fn from_components(values: &[f64]) -> Self {
        let mut h = Hypercomplex::zero(values.len().max(1).next_power_of_two());
        h.0[..values.len()].copy_from_slice(values);
        h
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn conj(&self) -> Self {
        let mut out = vec![0.0; self.dim()];
        conj_into(&self.0, &mut out);
        Hypercomplex(out)
    }

    pub fn mul(&self, other: &Hypercomplex) -> Self {
        assert_eq!(self.dim(), other.dim(), "hypercomplex dimension mismatch");
        let mut out = vec![0.0; self.dim()];
        cd_mul(&self.0, &other.0, &mut out);
        Hypercomplex(out)
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// Block side along one axis: the configured size, or the whole axis when
/// the image is smaller. Trailing partial blocks are dropped.
fn block_grid(len: usize, block: usize) -> (usize, usize) {
    let b = if len < block { len } else { block };
    (b, len / b)
}

/// Variances this small relative to the squared mean level are round-off
/// from centring a constant block.
const FLAT: f64 = 1e-24;

/// Combines block moments into the quality index. `cov` is signed for the
/// scalar index and a modulus for the hypercomplex one. `None` for a
/// degenerate block (both constant and both zero-mean).
fn block_quality(mean_x: f64, mean_y: f64, var_x: f64, var_y: f64, cov: f64) -> Option<f64> {
    let var_sum = var_x + var_y;
    let mean_sum = mean_x * mean_x + mean_y * mean_y;
    let flat = var_sum <= FLAT * mean_sum;
    if flat && mean_sum == 0.0 {
        return None;
    }
    let structure = if flat { 1.0 } else { 2.0 * cov / var_sum };
    let luminance = if mean_sum == 0.0 {
        1.0
    } else {
        2.0 * mean_x * mean_y / mean_sum
    };
    Some(structure * luminance)
}

/// Q2n averaged over blocks of every sample; bands are zero-padded to the
/// next power of two.
pub fn q2n(x: &Tensor4, reference: &Tensor4, cfg: &MetricConfig) -> Result<f64> {
    check_same(x, reference, "q2n")?;
    if cfg.q2n_block == 0 {
        return Err(Error::Config("q2n block must be positive".into()));
    }
    let [n, c, h, w] = x.dims();
    let dim = c.next_power_of_two();
    let (by, ny) = block_grid(h, cfg.q2n_block);
    let (bx, nx) = block_grid(w, cfg.q2n_block);
    let count = (by * bx) as f64;
    let pixel = |t: &Tensor4, ni: usize, y: usize, xx: usize| {
        let mut v = vec![0.0; dim];
        for (b, slot) in v.iter_mut().enumerate().take(c) {
            *slot = t.get([ni, b, y, xx]);
        }
        Hypercomplex(v)
    };

    let mut total = 0.0;
    let mut used = 0usize;
    for ni in 0..n {
        for iy in 0..ny {
            for ix in 0..nx {
                let coords: Vec<(usize, usize)> = (0..by)
                    .flat_map(|dy| (0..bx).map(move |dx| (iy * by + dy, ix * bx + dx)))
                    .collect();
                let xs: Vec<Hypercomplex> = coords.iter().map(|&(y, xx)| pixel(x, ni, y, xx)).collect();
                let ys: Vec<Hypercomplex> = coords.iter().map(|&(y, xx)| pixel(reference, ni, y, xx)).collect();
                let mean = |v: &[Hypercomplex]| {
                    let mut m = vec![0.0; dim];
                    for p in v {
                        m.iter_mut().zip(&p.0).for_each(|(a, b)| *a += b / count);
                    }
                    Hypercomplex(m)
                };
                let (mx, my) = (mean(&xs), mean(&ys));
                let center = |v: Vec<Hypercomplex>, m: &Hypercomplex| -> Vec<Hypercomplex> {
                    v.into_iter()
                        .map(|p| Hypercomplex(p.0.iter().zip(&m.0).map(|(a, b)| a - b).collect()))
                        .collect()
                };
                let (dx, dy) = (center(xs, &mx), center(ys, &my));
                let var_x = dx.iter().map(Hypercomplex::norm_sq).sum::<f64>() / count;
                let var_y = dy.iter().map(Hypercomplex::norm_sq).sum::<f64>() / count;
                let mut cov = vec![0.0; dim];
                for (a, b) in dx.iter().zip(&dy) {
                    cov.iter_mut()
                        .zip(&a.mul(&b.conj()).0)
                        .for_each(|(s, v)| *s += v / count);
                }
                if let Some(q) = block_quality(mx.norm(), my.norm(), var_x, var_y, Hypercomplex(cov).norm()) {
                    total += q;
                    used += 1;
                }
            }
        }
    }
    // only all-zero blocks on both sides: the images agree
    Ok(if used == 0 { 1.0 } else { total / used as f64 })
}

/// Classical single-band UIQI of one plane on non-overlapping blocks
/// (signed covariance); `None` when every block is degenerate.
pub(crate) fn uiqi_plane(a: &[f64], b: &[f64], h: usize, w: usize, block: usize) -> Option<f64> {
    let (by, ny) = block_grid(h, block);
    let (bx, nx) = block_grid(w, block);
    let count = (by * bx) as f64;
    let mut total = 0.0;
    let mut used = 0usize;
    for iy in 0..ny {
        for ix in 0..nx {
            let idx = |dy: usize, dx: usize| (iy * by + dy) * w + ix * bx + dx;
            let (mut sa, mut sb) = (0.0, 0.0);
            for dy in 0..by {
                for dx in 0..bx {
                    sa += a[idx(dy, dx)];
                    sb += b[idx(dy, dx)];
                }
            }
            let (ma, mb) = (sa / count, sb / count);
            let (mut vaa, mut vbb, mut vab) = (0.0, 0.0, 0.0);
            for dy in 0..by {
                for dx in 0..bx {
                    let (p, q) = (a[idx(dy, dx)] - ma, b[idx(dy, dx)] - mb);
                    vaa += p * p;
                    vbb += q * q;
                    vab += p * q;
                }
            }
            if let Some(q) = block_quality(ma, mb, vaa / count, vbb / count, vab / count) {
                total += q;
                used += 1;
            }
        }
    }
    (used > 0).then(|| total / used as f64)
}

/// UIQI of single-band images, averaged over the blocks of every sample.
pub fn uiqi(x: &Tensor4, reference: &Tensor4, block: usize) -> Result<f64> {
    check_same(x, reference, "uiqi")?;
    if x.c() != 1 {
        return Err(Error::Shape(format!(
            "uiqi takes single-band images, got {} bands",
            x.c()
        )));
    }
    if block == 0 {
        return Err(Error::Config("uiqi block must be positive".into()));
    }
    let (h, w) = (x.h(), x.w());
    let per_sample: Vec<f64> = (0..x.n())
        .filter_map(|ni| uiqi_plane(x.plane(ni, 0), reference.plane(ni, 0), h, w, block))
        .collect();
    Ok(if per_sample.is_empty() {
        1.0
    } else {
        per_sample.iter().sum::<f64>() / per_sample.len() as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::testutil::random_tensor;
    use proptest::prelude::*;

    fn unit(dim: usize, i: usize) -> Hypercomplex {
        let mut h = Hypercomplex::zero(dim);
        h.0[i] = 1.0;
        h
    }

    #[test]
    fn quaternion_units() {
        let (one, i, j, k) = (unit(4, 0), unit(4, 1), unit(4, 2), unit(4, 3));
        let neg = |h: Hypercomplex| Hypercomplex(h.0.iter().map(|v| -v).collect());
        assert_eq!(i.mul(&i), neg(one.clone()));
        assert_eq!(i.mul(&j), k);
        assert_eq!(j.mul(&i), neg(k.clone()));
        assert_eq!(j.mul(&k), i);
        assert_eq!(k.mul(&i), j);
    }

    #[test]
    fn complex_product() {
        let a = Hypercomplex(vec![1.0, 2.0]);
        let b = Hypercomplex(vec![3.0, -1.0]);
        assert_eq!(a.mul(&b), Hypercomplex(vec![5.0, 5.0]));
    }

    proptest! {
        #[test]
        fn norm_is_multiplicative_up_to_octonions(
            a in proptest::collection::vec(-2.0f64..2.0, 8),
            b in proptest::collection::vec(-2.0f64..2.0, 8),
            dim in prop::sample::select(vec![1usize, 2, 4, 8]),
        ) {
            let (x, y) = (Hypercomplex(a[..dim].to_vec()), Hypercomplex(b[..dim].to_vec()));
            prop_assert!((x.mul(&y).norm() - x.norm() * y.norm()).abs() < 1e-12);
        }

        #[test]
        fn times_conjugate_is_norm_squared(a in proptest::collection::vec(-2.0f64..2.0, 32)) {
            for dim in [1, 2, 4, 8, 16, 32] {
                let x = Hypercomplex(a[..dim].to_vec());
                let p = x.mul(&x.conj());
                prop_assert!((p.0[0] - x.norm_sq()).abs() < 1e-12);
                prop_assert!(p.0[1..].iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    fn positive(dims: [usize; 4], seed: u64) -> Tensor4 {
        random_tensor(dims, seed).map(|v| 0.5 + 0.4 * v)
    }

    #[test]
    fn identity_for_any_band_count() {
        let cfg = MetricConfig::default();
        for c in [1, 3, 4, 5, 8, 31] {
            let x = positive([1, c, 40, 40], c as u64);
            assert!((q2n(&x, &x, &cfg).unwrap() - 1.0).abs() < 1e-12, "{c} bands");
        }
    }

    #[test]
    fn identity_survives_band_permutation() {
        let cfg = MetricConfig::default();
        let x = positive([1, 4, 32, 32], 9);
        let perm = Tensor4::from_fn([1, 4, 32, 32], |[n, c, y, xx]| x.get([n, [2, 0, 3, 1][c], y, xx]));
        assert!((q2n(&perm, &perm, &cfg).unwrap() - 1.0).abs() < 1e-12);
    }

    /// Direct scalar UIQI with sample statistics, one 64×64 image split in 32×32 blocks.
    fn scalar_uiqi(x: &Tensor4, y: &Tensor4, block: usize) -> f64 {
        let mut qs = Vec::new();
        for by in (0..x.h()).step_by(block) {
            for bx in (0..x.w()).step_by(block) {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for i in by..by + block {
                    for j in bx..bx + block {
                        a.push(x.get([0, 0, i, j]));
                        b.push(y.get([0, 0, i, j]));
                    }
                }
                let n = a.len() as f64;
                let ma = a.iter().sum::<f64>() / n;
                let mb = b.iter().sum::<f64>() / n;
                let va = a.iter().map(|v| (v - ma).powi(2)).sum::<f64>() / (n - 1.0);
                let vb = b.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / (n - 1.0);
                let cab = a.iter().zip(&b).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / (n - 1.0);
                qs.push(4.0 * cab * ma * mb / ((va + vb) * (ma * ma + mb * mb)));
            }
        }
        qs.iter().sum::<f64>() / qs.len() as f64
    }

    #[test]
    fn single_band_reduces_to_uiqi() {
        let cfg = MetricConfig::default();
        let mut r = rng::seeded(3);
        for trial in 0..5 {
            let y = rng::uniform_tensor([1, 1, 64, 64], 0.0, 1.0, &mut r);
            let noise = rng::uniform_tensor([1, 1, 64, 64], -0.2, 0.2, &mut r);
            let x = y.zip_map(&noise, |a, b| a + b).unwrap();
            let oracle = scalar_uiqi(&x, &y, 32);
            assert!(oracle > 0.0, "trial {trial}");
            assert!((q2n(&x, &y, &cfg).unwrap() - oracle).abs() < 1e-10);
            assert!((uiqi(&x, &y, 32).unwrap() - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn anti_correlated_single_band_uses_modulus() {
        let cfg = MetricConfig::default();
        let y = positive([1, 1, 32, 32], 4);
        let x = y.map(|v| 1.0 - v);
        let signed = uiqi(&x, &y, 32).unwrap();
        assert!(signed < 0.0);
        assert!((q2n(&x, &y, &cfg).unwrap() - signed.abs()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_blocks() {
        let cfg = MetricConfig::default();
        let z = Tensor4::zeros([1, 2, 8, 8]);
        assert_eq!(q2n(&z, &z, &cfg).unwrap(), 1.0);
        // constant but different levels: only the luminance term remains
        let a = Tensor4::filled([1, 1, 8, 8], 0.2);
        let b = Tensor4::filled([1, 1, 8, 8], 0.4);
        let expect = 2.0 * 0.2 * 0.4 / (0.04 + 0.16);
        assert!((q2n(&a, &b, &cfg).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn trailing_partial_blocks_are_dropped() {
        let cfg = MetricConfig {
            q2n_block: 4,
            ..MetricConfig::default()
        };
        let x = positive([1, 2, 8, 8], 5);
        let mut y = positive([1, 2, 8, 8], 6);
        let base = q2n(&x, &y, &cfg).unwrap();
        let x10 = Tensor4::from_fn(
            [1, 2, 10, 10],
            |[n, c, i, j]| if i < 8 && j < 8 { x.get([n, c, i, j]) } else { 0.9 },
        );
        y = Tensor4::from_fn(
            [1, 2, 10, 10],
            |[n, c, i, j]| if i < 8 && j < 8 { y.get([n, c, i, j]) } else { 0.1 },
        );
        assert!((q2n(&x10, &y, &cfg).unwrap() - base).abs() < 1e-12);
    }
}
