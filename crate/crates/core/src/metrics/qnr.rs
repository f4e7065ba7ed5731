use super::q2n::uiqi_plane;
use super::MetricConfig;
use crate::datasim::{blur_replicate, decimate, gaussian_kernel};
use crate::error::{Error, Result};
use crate::tensor::Tensor4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QnrScores {
    pub qnr: f64,
    pub d_lambda: f64,
    pub d_s: f64,
}

impl QnrScores {
    pub fn from_distortions(d_lambda: f64, d_s: f64, cfg: &MetricConfig) -> Self {
        QnrScores {
            qnr: (1.0 - d_lambda).powf(cfg.qnr_alpha) * (1.0 - d_s).powf(cfg.qnr_beta),
            d_lambda,
            d_s,
        }
    }
}

fn q(a: &[f64], b: &[f64], h: usize, w: usize, block: usize) -> f64 {
    uiqi_plane(a, b, h, w, block).unwrap_or(1.0)
}

/// Full-resolution (no reference) quality: spectral distortion Dλ, spatial
/// distortion Ds and QNR = (1−Dλ)^α (1−Ds)^β.
///
/// UIQI uses `q2n_block` at full resolution and `q2n_block / ratio` at low
/// resolution. PAN is brought to low resolution with the Gaussian blur and
/// decimation of the data simulator (untouched when `ratio` is 1). With
/// several samples, the distortions are averaged before forming QNR.
pub fn qnr_suite(fused: &Tensor4, ms_lowres: &Tensor4, pan: &Tensor4, cfg: &MetricConfig) -> Result<QnrScores> {
    cfg.validate()?;
    let [n, c, h, w] = fused.dims();
    let r = cfg.ratio;
    if pan.dims() != [n, 1, h, w] {
        return Err(Error::Shape(format!("pan {:?} must be [{n}, 1, {h}, {w}]", pan.dims())));
    }
    if h % r != 0 || w % r != 0 || ms_lowres.dims() != [n, c, h / r, w / r] {
        return Err(Error::Shape(format!(
            "low-resolution image {:?} does not match fused {:?} at ratio {r}",
            ms_lowres.dims(),
            fused.dims()
        )));
    }
    if fused.is_empty() {
        return Err(Error::Shape("qnr: empty input".into()));
    }
    let pan_lr = if r == 1 {
        pan.clone()
    } else {
        let k = cfg.qnr_blur_kernel;
        decimate(&blur_replicate(pan, &gaussian_kernel(k, cfg.qnr_blur_sigma), k)?, r)?
    };
    let (hl, wl) = (h / r, w / r);
    let (block, block_lr) = (cfg.q2n_block, (cfg.q2n_block / r).max(1));
    if c < 2 {
        log::warn!("qnr: D_lambda needs at least two bands; reported as 0");
    }

    let (mut dl_total, mut ds_total) = (0.0, 0.0);
    for ni in 0..n {
        let mut dl = 0.0;
        let mut pairs = 0usize;
        for b in 0..c {
            for d in b + 1..c {
                let full = q(fused.plane(ni, b), fused.plane(ni, d), h, w, block);
                let low = q(ms_lowres.plane(ni, b), ms_lowres.plane(ni, d), hl, wl, block_lr);
                dl += (full - low).abs();
                pairs += 1;
            }
        }
        if pairs > 0 {
            dl_total += dl / pairs as f64;
        }
        let mut ds = 0.0;
        for b in 0..c {
            let full = q(fused.plane(ni, b), pan.plane(ni, 0), h, w, block);
            let low = q(ms_lowres.plane(ni, b), pan_lr.plane(ni, 0), hl, wl, block_lr);
            ds += (full - low).abs();
        }
        ds_total += ds / c as f64;
    }
    Ok(QnrScores::from_distortions(
        dl_total / n as f64,
        ds_total / n as f64,
        cfg,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{upsample, Interpolation};
    use crate::testutil::random_tensor;

    fn positive(dims: [usize; 4], seed: u64) -> Tensor4 {
        random_tensor(dims, seed).map(|v| 0.5 + 0.4 * v)
    }

    #[test]
    fn identical_at_unit_ratio_is_perfect() {
        let cfg = MetricConfig {
            ratio: 1,
            ..MetricConfig::default()
        };
        for c in [1, 4, 8] {
            let ms = positive([1, c, 32, 32], c as u64);
            let pan = positive([1, 1, 32, 32], 40 + c as u64);
            let s = qnr_suite(&ms, &ms, &pan, &cfg).unwrap();
            assert_eq!((s.qnr, s.d_lambda, s.d_s), (1.0, 0.0, 0.0));
        }
    }

    #[test]
    fn spectral_distortion_vanishes_for_symmetric_fixture() {
        // every band is the same image up to a positive gain, at both
        // resolutions, so all inter-band Q values coincide
        let cfg = MetricConfig {
            q2n_block: 16,
            ..MetricConfig::default()
        };
        let base = positive([1, 1, 32, 32], 1);
        let gains = [1.0, 0.8, 1.2, 0.9];
        let fused = Tensor4::from_fn([1, 4, 32, 32], |[_, c, y, x]| gains[c] * base.get([0, 0, y, x]));
        let lr_base = decimate(&blur_replicate(&base, &gaussian_kernel(3, 0.5), 3).unwrap(), 4).unwrap();
        let ms = Tensor4::from_fn([1, 4, 8, 8], |[_, c, y, x]| gains[c] * lr_base.get([0, 0, y, x]));
        let s = qnr_suite(&fused, &ms, &base, &cfg).unwrap();
        assert!(s.d_lambda < 1e-12, "{s:?}");
        // and PAN equal to the structure gives no spatial distortion either
        assert!(s.d_s < 1e-12, "{s:?}");
        assert!((s.qnr - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponents_and_ranges() {
        let cfg = MetricConfig::default();
        let s = QnrScores::from_distortions(0.1, 0.2, &cfg);
        assert!((s.qnr - 0.72).abs() < 1e-12);
        let sq = QnrScores::from_distortions(0.1, 0.2, &MetricConfig { qnr_alpha: 2.0, ..cfg });
        assert!((sq.qnr - 0.81 * 0.8).abs() < 1e-12);

        let ms = positive([1, 4, 8, 8], 2);
        let fused = upsample(&ms, 4, Interpolation::Bicubic).unwrap();
        let pan = positive([1, 1, 32, 32], 3);
        let s = qnr_suite(&fused, &ms, &pan, &cfg).unwrap();
        assert!(
            (0.0..=1.0).contains(&s.d_lambda) && (0.0..=1.0).contains(&s.d_s),
            "{s:?}"
        );
    }

    #[test]
    fn single_band_reports_zero_d_lambda() {
        let cfg = MetricConfig::default();
        let ms = positive([1, 1, 8, 8], 4);
        let fused = upsample(&ms, 4, Interpolation::Bicubic).unwrap();
        let s = qnr_suite(&fused, &ms, &positive([1, 1, 32, 32], 5), &cfg).unwrap();
        assert_eq!(s.d_lambda, 0.0);
    }

    #[test]
    fn shape_checks() {
        let cfg = MetricConfig::default();
        let f = positive([1, 2, 32, 32], 1);
        assert!(qnr_suite(&f, &positive([1, 2, 16, 16], 2), &positive([1, 1, 32, 32], 3), &cfg).is_err());
        assert!(qnr_suite(&f, &positive([1, 2, 8, 8], 2), &positive([1, 2, 32, 32], 3), &cfg).is_err());
    }
}
