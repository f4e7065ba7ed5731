use crate::error::{Error, Result};
use crate::tensor::{Matrix, Tensor4};

/// Reduced-resolution simulation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradeSpec {
    pub ratio: usize,
    pub kernel_size: usize,
    pub sigma: f64,
    /// c_hr × c_lr spectral response, rows nonnegative and summing to one.
    pub srf: Matrix,
}

impl DegradeSpec {
    /// 3×3 Gaussian, σ = 0.5, ratio 4.
    pub fn with_srf(srf: Matrix) -> Self {
        DegradeSpec {
            ratio: 4,
            kernel_size: 3,
            sigma: 0.5,
            srf,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ratio < 2 {
            return Err(Error::Config(format!("ratio must be at least 2, got {}", self.ratio)));
        }
        if self.kernel_size % 2 == 0 {
            return Err(Error::Config(format!(
                "blur kernel size must be odd, got {}",
                self.kernel_size
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!(
                "blur sigma must be positive, got {}",
                self.sigma
            )));
        }
        for r in 0..self.srf.rows() {
            let row = self.srf.row(r);
            if row.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                return Err(Error::Config(format!("srf row {r} has negative or non-finite entries")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("srf row {r} sums to {sum}, not 1")));
            }
        }
        Ok(())
    }

    pub fn kernel(&self) -> Vec<f64> {
        gaussian_kernel(self.kernel_size, self.sigma)
    }
}

/// Normalised k×k Gaussian, row-major.
pub fn gaussian_kernel(k: usize, sigma: f64) -> Vec<f64> {
    let r = (k / 2) as f64;
    let mut g: Vec<f64> = (0..k * k)
        .map(|i| {
            let (y, x) = ((i / k) as f64 - r, (i % k) as f64 - r);
            (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

/// Per-plane 2-D correlation with an odd k×k kernel, edges replicated.
pub fn blur_replicate(input: &Tensor4, kernel: &[f64], k: usize) -> Result<Tensor4> {
    if k % 2 == 0 || kernel.len() != k * k {
        return Err(Error::Shape(format!(
            "blur kernel must be odd k×k, got k={k} with {} taps",
            kernel.len()
        )));
    }
    let [n, c, h, w] = input.dims();
    let r = (k / 2) as isize;
    let mut out = Tensor4::zeros(input.dims());
    for ni in 0..n {
        for ci in 0..c {
            let src = input.plane(ni, ci);
            let dst = out.plane_mut(ni, ci);
            for y in 0..h {
                for x in 0..w {
                    let mut acc = 0.0;
                    for dy in -r..=r {
                        let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                        for dx in -r..=r {
                            let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                            acc += kernel[((dy + r) as usize) * k + (dx + r) as usize] * src[yy * w + xx];
                        }
                    }
                    dst[y * w + x] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Keeps every `ratio`-th pixel starting at (0, 0).
pub fn decimate(input: &Tensor4, ratio: usize) -> Result<Tensor4> {
    let [n, c, h, w] = input.dims();
    if ratio == 0 || h % ratio != 0 || w % ratio != 0 {
        return Err(Error::Shape(format!("{h}×{w} is not divisible by ratio {ratio}")));
    }
    let (ho, wo) = (h / ratio, w / ratio);
    Ok(Tensor4::from_fn([n, c, ho, wo], |[ni, ci, y, x]| {
        input.get([ni, ci, y * ratio, x * ratio])
    }))
}

/// Gaussian blur with edge replication, then decimation at offset 0.
pub fn wald_degrade(gt: &Tensor4, spec: &DegradeSpec) -> Result<Tensor4> {
    let (h, w, r) = (gt.h(), gt.w(), spec.ratio);
    if r == 0 || h % r != 0 || w % r != 0 {
        return Err(Error::Shape(format!("{h}×{w} is not divisible by ratio {r}")));
    }
    decimate(&blur_replicate(gt, &spec.kernel(), spec.kernel_size)?, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_tensor;

    fn spec(ratio: usize) -> DegradeSpec {
        DegradeSpec {
            ratio,
            ..DegradeSpec::with_srf(Matrix::from_vec(1, 2, vec![0.5, 0.5]).unwrap())
        }
    }

    #[test]
    fn kernel_is_normalised_and_symmetric() {
        let g = gaussian_kernel(3, 0.5);
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(g[0], g[8]);
        assert_eq!(g[1], g[3]);
        // centre / edge ratio is exp(1/(2σ²)) = e²
        assert!((g[4] / g[1] - 2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn constant_stays_constant() {
        let t = Tensor4::filled([1, 3, 16, 16], 0.37);
        let lr = wald_degrade(&t, &spec(4)).unwrap();
        assert_eq!(lr.dims(), [1, 3, 4, 4]);
        assert!(lr.data().iter().all(|v| (v - 0.37).abs() < 1e-15));
    }

    #[test]
    fn sixty_four_to_sixteen() {
        let t = random_tensor([1, 2, 64, 64], 1);
        assert_eq!(wald_degrade(&t, &spec(4)).unwrap().dims(), [1, 2, 16, 16]);
    }

    #[test]
    fn matches_double_loop_reference() {
        let t = random_tensor([2, 2, 8, 8], 2);
        let s = spec(2);
        let g = gaussian_kernel(3, 0.5);
        let lr = wald_degrade(&t, &s).unwrap();
        for n in 0..2 {
            for c in 0..2 {
                for i in 0..4 {
                    for j in 0..4 {
                        let (y, x) = (2 * i as isize, 2 * j as isize);
                        let mut acc = 0.0;
                        for a in 0..3isize {
                            for b in 0..3isize {
                                let yy = (y + a - 1).clamp(0, 7) as usize;
                                let xx = (x + b - 1).clamp(0, 7) as usize;
                                acc += g[(a * 3 + b) as usize] * t.get([n, c, yy, xx]);
                            }
                        }
                        assert!((lr.get([n, c, i, j]) - acc).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn interior_mean_is_conserved() {
        // a field that is constant beyond a margin: replicate padding sees the
        // same constant, so the blurred total matches exactly
        let mut t = Tensor4::filled([1, 1, 12, 12], 0.2);
        let centre = random_tensor([1, 1, 6, 6], 3);
        for y in 0..6 {
            for x in 0..6 {
                t.set([0, 0, y + 3, x + 3], centre.get([0, 0, y, x]));
            }
        }
        let b = blur_replicate(&t, &gaussian_kernel(3, 0.5), 3).unwrap();
        let mean = |t: &Tensor4| t.data().iter().sum::<f64>() / t.len() as f64;
        assert!((mean(&b) - mean(&t)).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_specs() {
        let t = random_tensor([1, 1, 10, 10], 4);
        assert!(matches!(wald_degrade(&t, &spec(4)), Err(Error::Shape(_))));
        assert!(spec(1).validate().is_err());
        let mut s = spec(4);
        s.sigma = 0.0;
        assert!(s.validate().is_err());
        let mut s = spec(4);
        s.srf = Matrix::from_vec(1, 2, vec![0.7, 0.7]).unwrap();
        assert!(s.validate().is_err());
        spec(4).validate().unwrap();
    }
}
