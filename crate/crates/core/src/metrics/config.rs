use crate::error::{Error, Result};

/// Every constant the metrics depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    /// Resolution ratio between the fused and the low-resolution image.
    pub ratio: usize,
    /// Side of the non-overlapping Q2n / UIQI blocks at full resolution.
    pub q2n_block: usize,
    pub qnr_alpha: f64,
    pub qnr_beta: f64,
    pub ssim_window: usize,
    pub ssim_sigma: f64,
    pub ssim_k1: f64,
    pub ssim_k2: f64,
    pub peak: f64,
    /// Reported PSNR when the error vanishes; larger values are clamped.
    pub psnr_cap: f64,
    /// Gaussian used to bring PAN to the low resolution for Ds.
    pub qnr_blur_kernel: usize,
    pub qnr_blur_sigma: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            ratio: 4,
            q2n_block: 32,
            qnr_alpha: 1.0,
            qnr_beta: 1.0,
            ssim_window: 11,
            ssim_sigma: 1.5,
            ssim_k1: 0.01,
            ssim_k2: 0.03,
            peak: 1.0,
            psnr_cap: 100.0,
            qnr_blur_kernel: 3,
            qnr_blur_sigma: 0.5,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.ratio == 0 {
            return bad("metric ratio must be at least 1".into());
        }
        if self.q2n_block == 0 {
            return bad("q2n_block must be positive".into());
        }
        if self.ssim_window == 0 || self.ssim_window % 2 == 0 {
            return bad(format!("ssim window must be odd, got {}", self.ssim_window));
        }
        if self.qnr_blur_kernel % 2 == 0 {
            return bad(format!("qnr blur kernel must be odd, got {}", self.qnr_blur_kernel));
        }
        for (name, v) in [
            ("ssim_sigma", self.ssim_sigma),
            ("peak", self.peak),
            ("qnr_blur_sigma", self.qnr_blur_sigma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}
