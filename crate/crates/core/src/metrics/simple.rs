use super::{band_values, check_same, MetricConfig};
use crate::error::{Error, Result};
use crate::tensor::Tensor4;

/// Mean spectral angle in degrees; pixels where either spectrum is zero
/// contribute 0.
pub fn sam(x: &Tensor4, y: &Tensor4) -> Result<f64> {
    check_same(x, y, "sam")?;
    let [n, c, h, w] = x.dims();
    let hw = h * w;
    let mut total = 0.0;
    for ni in 0..n {
        let (xs, ys) = (x.sample(ni), y.sample(ni));
        for p in 0..hw {
            let (mut dot, mut nx, mut ny) = (0.0, 0.0, 0.0);
            for b in 0..c {
                let (a, r) = (xs[b * hw + p], ys[b * hw + p]);
                dot += a * r;
                nx += a * a;
                ny += r * r;
            }
            if nx > 0.0 && ny > 0.0 {
                total += (dot / (nx * ny).sqrt()).clamp(-1.0, 1.0).acos();
            }
        }
    }
    Ok((total / (n * hw) as f64).to_degrees())
}

/// (100/r)·sqrt(mean_c (RMSE_c / μ_c)²). Bands whose reference mean is zero
/// are skipped with a warning; an error if none remain.
pub fn ergas(x: &Tensor4, reference: &Tensor4, ratio: usize) -> Result<f64> {
    check_same(x, reference, "ergas")?;
    if ratio == 0 {
        return Err(Error::Config("ergas ratio must be at least 1".into()));
    }
    let mut acc = 0.0;
    let mut used = 0;
    for c in 0..x.c() {
        let (xv, rv) = (band_values(x, c), band_values(reference, c));
        let mean = rv.iter().sum::<f64>() / rv.len() as f64;
        if mean == 0.0 {
            log::warn!("ergas: band {c} has zero reference mean, excluded");
            continue;
        }
        let mse = xv.iter().zip(&rv).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / rv.len() as f64;
        acc += mse / (mean * mean);
        used += 1;
    }
    if used == 0 {
        return Err(Error::Numeric("ergas: every band has zero reference mean".into()));
    }
    Ok(100.0 / ratio as f64 * (acc / used as f64).sqrt())
}

/// Band-averaged PSNR in dB, clamped at `cfg.psnr_cap`.
pub fn psnr(x: &Tensor4, reference: &Tensor4, cfg: &MetricConfig) -> Result<f64> {
    check_same(x, reference, "psnr")?;
    let mut total = 0.0;
    for c in 0..x.c() {
        let (xv, rv) = (band_values(x, c), band_values(reference, c));
        let mse = xv.iter().zip(&rv).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / rv.len() as f64;
        total += if mse == 0.0 {
            cfg.psnr_cap
        } else {
            (10.0 * (cfg.peak * cfg.peak / mse).log10()).min(cfg.psnr_cap)
        };
    }
    Ok(total / x.c() as f64)
}

const LAPLACIAN: [f64; 9] = [0.0, -1.0, 0.0, -1.0, 4.0, -1.0, 0.0, -1.0, 0.0];

fn high_pass(plane: &[f64], h: usize, w: usize) -> Vec<f64> {
    let at = |y: isize, x: isize| {
        if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
            0.0
        } else {
            plane[y as usize * w + x as usize]
        }
    };
    let mut out = vec![0.0; h * w];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for (q, k) in LAPLACIAN.iter().enumerate() {
                acc += k * at(y + q as isize / 3 - 1, x + q as isize % 3 - 1);
            }
            out[y as usize * w + x as usize] = acc;
        }
    }
    out
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
    }
}

/// Band-averaged correlation of 4-neighbour Laplacian responses (zero
/// padding). A band whose response has no variance contributes 0.
pub fn scc(x: &Tensor4, reference: &Tensor4) -> Result<f64> {
    check_same(x, reference, "scc")?;
    let [n, c, h, w] = x.dims();
    let mut total = 0.0;
    for ci in 0..c {
        let (mut fx, mut fr) = (Vec::with_capacity(n * h * w), Vec::with_capacity(n * h * w));
        for ni in 0..n {
            fx.extend(high_pass(x.plane(ni, ci), h, w));
            fr.extend(high_pass(reference.plane(ni, ci), h, w));
        }
        match pearson(&fx, &fr) {
            Some(r) => total += r,
            None => log::warn!("scc: band {ci} has a flat high-pass response, counted as 0"),
        }
    }
    Ok(total / c as f64)
}
