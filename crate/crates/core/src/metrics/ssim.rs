use super::{check_same, MetricConfig};
use crate::error::Result;
use crate::tensor::Tensor4;

fn gaussian_1d(size: usize, sigma: f64) -> Vec<f64> {
    let r = (size / 2) as f64;
    let g: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - r).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Separable weighted average over every window that fits inside the plane.
fn filter_valid(plane: &[f64], h: usize, w: usize, g: &[f64]) -> Vec<f64> {
    let k = g.len();
    let (ho, wo) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * wo];
    for y in 0..h {
        for x in 0..wo {
            rows[y * wo + x] = (0..k).map(|d| g[d] * plane[y * w + x + d]).sum();
        }
    }
    let mut out = vec![0.0; ho * wo];
    for y in 0..ho {
        for x in 0..wo {
            out[y * wo + x] = (0..k).map(|d| g[d] * rows[(y + d) * wo + x]).sum();
        }
    }
    out
}

/// Window side actually used: the configured one, shrunk to the largest odd
/// size that fits the image.
pub(crate) fn effective_window(cfg: &MetricConfig, h: usize, w: usize) -> usize {
    let fit = h.min(w);
    let fit = if fit % 2 == 0 { fit - 1 } else { fit };
    cfg.ssim_window.min(fit).max(1)
}

/// Mean SSIM over valid Gaussian windows, averaged over samples and bands.
pub fn ssim(x: &Tensor4, reference: &Tensor4, cfg: &MetricConfig) -> Result<f64> {
    check_same(x, reference, "ssim")?;
    let [n, c, h, w] = x.dims();
    let g = gaussian_1d(effective_window(cfg, h, w), cfg.ssim_sigma);
    let c1 = (cfg.ssim_k1 * cfg.peak).powi(2);
    let c2 = (cfg.ssim_k2 * cfg.peak).powi(2);
    let mut total = 0.0;
    let mut count = 0usize;
    for ni in 0..n {
        for ci in 0..c {
            let (a, b) = (x.plane(ni, ci), reference.plane(ni, ci));
            let sq = |f: &dyn Fn(usize) -> f64| filter_valid(&(0..h * w).map(f).collect::<Vec<_>>(), h, w, &g);
            let (ma, mb) = (filter_valid(a, h, w, &g), filter_valid(b, h, w, &g));
            let (aa, bb, ab) = (sq(&|i| a[i] * a[i]), sq(&|i| b[i] * b[i]), sq(&|i| a[i] * b[i]));
            for i in 0..ma.len() {
                let (mx, my) = (ma[i], mb[i]);
                let (vx, vy, cxy) = (aa[i] - mx * mx, bb[i] - my * my, ab[i] - mx * my);
                total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_tensor;

    /// Direct per-window evaluation with the 2-D Gaussian.
    fn direct(x: &Tensor4, y: &Tensor4, cfg: &MetricConfig) -> f64 {
        let [_, c, h, w] = x.dims();
        let k = effective_window(cfg, h, w);
        let r = (k / 2) as f64;
        let mut g2 = vec![0.0; k * k];
        for u in 0..k {
            for v in 0..k {
                g2[u * k + v] =
                    (-((u as f64 - r).powi(2) + (v as f64 - r).powi(2)) / (2.0 * cfg.ssim_sigma.powi(2))).exp();
            }
        }
        let s: f64 = g2.iter().sum();
        g2.iter_mut().for_each(|v| *v /= s);
        let (c1, c2) = ((cfg.ssim_k1 * cfg.peak).powi(2), (cfg.ssim_k2 * cfg.peak).powi(2));
        let mut total = 0.0;
        let mut count = 0.0;
        for ci in 0..c {
            for i in 0..=h - k {
                for j in 0..=w - k {
                    let (mut mx, mut my) = (0.0, 0.0);
                    for u in 0..k {
                        for v in 0..k {
                            mx += g2[u * k + v] * x.get([0, ci, i + u, j + v]);
                            my += g2[u * k + v] * y.get([0, ci, i + u, j + v]);
                        }
                    }
                    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
                    for u in 0..k {
                        for v in 0..k {
                            let (dx, dy) = (x.get([0, ci, i + u, j + v]) - mx, y.get([0, ci, i + u, j + v]) - my);
                            vx += g2[u * k + v] * dx * dx;
                            vy += g2[u * k + v] * dy * dy;
                            cxy += g2[u * k + v] * dx * dy;
                        }
                    }
                    total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                    count += 1.0;
                }
            }
        }
        total / count
    }

    #[test]
    fn identity_is_one() {
        let cfg = MetricConfig::default();
        let x = random_tensor([2, 3, 16, 16], 1).map(|v| 0.5 + 0.5 * v);
        assert!((ssim(&x, &x, &cfg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_shift_matches_direct_windows() {
        let cfg = MetricConfig::default();
        let x = random_tensor([1, 2, 16, 16], 2).map(|v| 0.5 + 0.4 * v);
        let y = x.map(|v| v + 0.1);
        let s = ssim(&x, &y, &cfg).unwrap();
        assert!((s - direct(&x, &y, &cfg)).abs() < 1e-12);
        assert!(s < 1.0);
        let z = random_tensor([1, 2, 16, 16], 3).map(|v| 0.5 + 0.4 * v);
        assert!((ssim(&x, &z, &cfg).unwrap() - direct(&x, &z, &cfg)).abs() < 1e-12);
    }

    #[test]
    fn small_images_shrink_the_window() {
        let cfg = MetricConfig::default();
        assert_eq!(effective_window(&cfg, 8, 10), 7);
        assert_eq!(effective_window(&cfg, 64, 64), 11);
        let x = random_tensor([1, 1, 6, 6], 4).map(|v| 0.5 + 0.4 * v);
        let y = random_tensor([1, 1, 6, 6], 5).map(|v| 0.5 + 0.4 * v);
        assert!((ssim(&x, &y, &cfg).unwrap() - direct(&x, &y, &cfg)).abs() < 1e-12);
    }
}
