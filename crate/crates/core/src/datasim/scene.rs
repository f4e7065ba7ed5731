use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};
use crate::tensor::Tensor4;

/// Synthetic ground-truth scene parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub bands: usize,
    pub size: usize,
    pub n_shapes: usize,
    /// Gaussian σ, in pixels, of the low-pass applied to the background noise.
    pub smoothness: f64,
}

impl SceneSpec {
    pub fn validate(&self, ratio: usize) -> Result<()> {
        if self.bands == 0 || self.size == 0 {
            return Err(Error::Config("scene needs at least one band and one pixel".into()));
        }
        if ratio == 0 || self.size % ratio != 0 {
            return Err(Error::Config(format!(
                "scene size {} is not divisible by ratio {ratio}",
                self.size
            )));
        }
        if !(self.smoothness > 0.0) {
            return Err(Error::Config(format!(
                "smoothness must be positive, got {}",
                self.smoothness
            )));
        }
        Ok(())
    }
}

const BACKGROUND_GAIN: f64 = 1.5;

/// Periodised 1-D Gaussian over `len` taps (offset 0 first).
fn periodic_gaussian(len: usize, sigma: f64) -> Vec<f64> {
    if sigma > 10.0 * len as f64 {
        // the wrapped Gaussian is flat to far below f64 resolution
        return vec![1.0 / len as f64; len];
    }
    let wraps = (3.0 * sigma / len as f64).ceil() as i64 + 1;
    let mut g: Vec<f64> = (0..len as i64)
        .map(|d| {
            (-wraps..=wraps)
                .map(|m| {
                    let x = (d + m * len as i64) as f64;
                    (-x * x / (2.0 * sigma * sigma)).exp()
                })
                .sum()
        })
        .collect();
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

/// White noise circularly low-passed with a separable Gaussian.
fn smooth_field(size: usize, sigma: f64, rng: &mut SeededRng) -> Vec<f64> {
    let mut noise = vec![0.0; size * size];
    rng::fill_normal(&mut noise, 1.0, rng);
    let g = periodic_gaussian(size, sigma);
    let mut rows = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            rows[y * size + x] = (0..size).map(|d| g[d] * noise[y * size + (x + size - d) % size]).sum();
        }
    }
    let mut out = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            out[y * size + x] = (0..size).map(|d| g[d] * rows[((y + size - d) % size) * size + x]).sum();
        }
    }
    out
}

/// Smooth per-band background plus hard-edged rectangles and disks with
/// their own spectra, clamped to [0, 1]. Deterministic per seed.
pub fn gen_scene(spec: &SceneSpec) -> Result<Tensor4> {
    spec.validate(1)?;
    let (c, s) = (spec.bands, spec.size);
    let mut rng = rng::seeded(spec.seed);

    // one shared texture field modulating per-band levels: spatial detail is
    // common to all bands, as in real reflectance under varying illumination
    let texture = smooth_field(s, spec.smoothness, &mut rng);
    let phase = rng.random_range(0.0..2.0 * PI);
    let mut scene = Tensor4::zeros([1, c, s, s]);
    for b in 0..c {
        let level = 0.5 + 0.2 * (2.0 * PI * b as f64 / c as f64 + phase).sin();
        let plane = scene.plane_mut(0, b);
        for (p, v) in plane.iter_mut().enumerate() {
            *v = level * (1.0 + BACKGROUND_GAIN * texture[p]);
        }
    }

    for _ in 0..spec.n_shapes {
        let disk = rng.random_bool(0.5);
        let (cy, cx) = (rng.random_range(0.0..s as f64), rng.random_range(0.0..s as f64));
        let lo = (s as f64 / 8.0).max(1.0);
        let hi = (s as f64 / 3.0).max(lo + 1.0);
        let (ry, rx) = (rng.random_range(lo..hi) / 2.0, rng.random_range(lo..hi) / 2.0);
        let level = rng.random_range(0.1..0.9);
        let (amp, phase) = (rng.random_range(0.0..0.3), rng.random_range(0.0..2.0 * PI));
        let spectrum: Vec<f64> = (0..c)
            .map(|b| (level + amp * (2.0 * PI * b as f64 / c as f64 + phase).sin()).clamp(0.0, 1.0))
            .collect();
        for y in 0..s {
            for x in 0..s {
                let (dy, dx) = (y as f64 + 0.5 - cy, x as f64 + 0.5 - cx);
                let inside = if disk {
                    (dy / ry).powi(2) + (dx / rx).powi(2) <= 1.0
                } else {
                    dy.abs() <= ry && dx.abs() <= rx
                };
                if inside {
                    for (b, v) in spectrum.iter().enumerate() {
                        scene.set([0, b, y, x], *v);
                    }
                }
            }
        }
    }
    scene.data_mut().iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(seed: u64) -> SceneSpec {
        SceneSpec {
            seed,
            bands: 4,
            size: 32,
            n_shapes: 6,
            smoothness: 3.0,
        }
    }

    fn band_std(t: &Tensor4, b: usize) -> f64 {
        let p = t.plane(0, b);
        let m = p.iter().sum::<f64>() / p.len() as f64;
        (p.iter().map(|v| (v - m).powi(2)).sum::<f64>() / p.len() as f64).sqrt()
    }

    #[test]
    fn deterministic_and_in_range() {
        let a = gen_scene(&spec(7)).unwrap();
        assert_eq!(a, gen_scene(&spec(7)).unwrap());
        assert_ne!(a, gen_scene(&spec(8)).unwrap());
        assert_eq!(a.dims(), [1, 4, 32, 32]);
        assert!(a.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn heavy_smoothing_without_shapes_is_flat() {
        for smoothness in [50.0, 1e6] {
            let t = gen_scene(&SceneSpec {
                n_shapes: 0,
                smoothness,
                ..spec(3)
            })
            .unwrap();
            for b in 0..4 {
                assert!(band_std(&t, b) < 0.05, "σ={smoothness} band {b}");
            }
        }
    }

    #[test]
    fn has_texture_at_default_settings() {
        let t = gen_scene(&spec(1)).unwrap();
        assert!((0..4).all(|b| band_std(&t, b) > 0.05));
    }

    #[test]
    fn periodic_kernel_sums_to_one() {
        for (len, sigma) in [(16, 0.7), (16, 40.0), (9, 3.0), (8, 1e9)] {
            let g = periodic_gaussian(len, sigma);
            assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
