use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Matrix, Tensor4};

/// hr[n, j] = Σ_b srf[j, b] · gt[n, b].
pub fn srf_project(gt: &Tensor4, srf: &Matrix) -> Result<Tensor4> {
    let [n, c, h, w] = gt.dims();
    if srf.cols() != c {
        return Err(Error::Shape(format!(
            "srf has {} columns, image has {c} bands",
            srf.cols()
        )));
    }
    let hw = h * w;
    let mut out = Tensor4::zeros([n, srf.rows(), h, w]);
    for ni in 0..n {
        for j in 0..srf.rows() {
            let dst = out.plane_mut(ni, j);
            for b in 0..c {
                let wgt = srf.get(j, b);
                let src = &gt.sample(ni)[b * hw..(b + 1) * hw];
                dst.iter_mut().zip(src).for_each(|(d, s)| *d += wgt * s);
            }
        }
    }
    Ok(out)
}

/// A single uniform row for one output band; otherwise Gaussian bumps with
/// evenly spaced centres over the band axis. Rows sum to one.
pub fn default_srf(c_hr: usize, c_lr: usize) -> Result<Matrix> {
    if c_hr == 0 || c_lr == 0 {
        return Err(Error::Config("srf needs at least one band on each side".into()));
    }
    if c_hr == 1 {
        return Matrix::from_vec(1, c_lr, vec![1.0 / c_lr as f64; c_lr]);
    }
    let width = c_lr as f64 / (2.0 * c_hr as f64);
    let mut m = Matrix::zeros(c_hr, c_lr);
    for j in 0..c_hr {
        let centre = (j as f64 + 0.5) * c_lr as f64 / c_hr as f64 - 0.5;
        let row: Vec<f64> = (0..c_lr)
            .map(|b| (-((b as f64 - centre) / width).powi(2) / 2.0).exp())
            .collect();
        let s: f64 = row.iter().sum();
        for (b, v) in row.into_iter().enumerate() {
            m.set(j, b, v / s);
        }
    }
    Ok(m)
}

/// Whitespace-separated rows, one per output band; `#` starts a comment.
pub fn read_srf(path: &Path) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::format(path, "srf rows must be non-empty and of equal length"));
    }
    Matrix::from_vec(rows.len(), cols, rows.concat())
}

pub fn write_srf(path: &Path, srf: &Matrix) -> Result<()> {
    let text: String = (0..srf.rows())
        .map(|r| {
            srf.row(r)
                .iter()
                .map(|v| format!("{v:e}"))
                .collect::<Vec<_>>()
                .join(" ")
                + "\n"
        })
        .collect();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_tensor;

    #[test]
    fn uniform_row_gives_band_mean() {
        let gt = random_tensor([2, 4, 3, 3], 1);
        let pan = srf_project(&gt, &default_srf(1, 4).unwrap()).unwrap();
        for n in 0..2 {
            for p in 0..9 {
                let mean: f64 = (0..4).map(|b| gt.plane(n, b)[p]).sum::<f64>() / 4.0;
                assert!((pan.plane(n, 0)[p] - mean).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn identity_srf_is_identity() {
        let gt = random_tensor([1, 3, 4, 4], 2);
        assert_eq!(srf_project(&gt, &Matrix::identity(3)).unwrap(), gt);
    }

    #[test]
    fn two_band_hand_case() {
        let gt = Tensor4::from_vec([1, 2, 1, 2], vec![1.0, 2.0, 10.0, 20.0]).unwrap();
        let srf = Matrix::from_vec(1, 2, vec![0.25, 0.75]).unwrap();
        let hr = srf_project(&gt, &srf).unwrap();
        assert_eq!(hr.data(), &[7.75, 15.5]);
        assert!(srf_project(&gt, &Matrix::identity(3)).is_err());
    }

    #[test]
    fn default_rows_are_stochastic() {
        for (a, b) in [(1, 8), (3, 31), (2, 4)] {
            let m = default_srf(a, b).unwrap();
            for r in 0..a {
                assert!((m.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(m.row(r).iter().all(|v| *v >= 0.0));
            }
        }
        // spectrally and spatially constant image maps to the same constant
        let flat = Tensor4::filled([1, 31, 4, 4], 0.6);
        let rgb = srf_project(&flat, &default_srf(3, 31).unwrap()).unwrap();
        assert!(rgb.data().iter().all(|v| (v - 0.6).abs() < 1e-12));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("srf.txt");
        let m = default_srf(3, 31).unwrap();
        write_srf(&p, &m).unwrap();
        assert_eq!(read_srf(&p).unwrap(), m);
        fs::write(&p, "0.5 0.5\n1.0\n").unwrap();
        assert!(matches!(read_srf(&p), Err(Error::Format { .. })));
    }
}
