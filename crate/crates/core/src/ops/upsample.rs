//! Integer-factor spatial upsampling for data preparation (no VJP).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::Tensor4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Nearest,
    /// Catmull-Rom cubic convolution (a = −0.5) with edge replication.
    #[default]
    Bicubic,
}

impl fmt::Display for Interpolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Interpolation::Nearest => "nearest",
            Interpolation::Bicubic => "bicubic",
        })
    }
}

impl FromStr for Interpolation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "nearest" => Ok(Interpolation::Nearest),
            "bicubic" => Ok(Interpolation::Bicubic),
            other => Err(Error::Config(format!("unknown interpolation `{other}`"))),
        }
    }
}

const CUBIC_A: f64 = -0.5;

fn cubic_weight(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((CUBIC_A + 2.0) * x - (CUBIC_A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((CUBIC_A * x - 5.0 * CUBIC_A) * x + 8.0 * CUBIC_A) * x - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

/// Per output coordinate: four clamped source indices and their weights.
fn cubic_taps(len: usize, factor: usize) -> Vec<([usize; 4], [f64; 4])> {
    let last = len as isize - 1;
    (0..len * factor)
        .map(|o| {
            // pixel-centre alignment
            let x = (o as f64 + 0.5) / factor as f64 - 0.5;
            let x0 = x.floor();
            let t = x - x0;
            let x0 = x0 as isize;
            let mut idx = [0usize; 4];
            let mut wts = [0.0; 4];
            for (m, off) in (-1..=2).enumerate() {
                idx[m] = (x0 + off).clamp(0, last) as usize;
                wts[m] = cubic_weight(t - off as f64);
            }
            (idx, wts)
        })
        .collect()
}

pub fn upsample(input: &Tensor4, factor: usize, method: Interpolation) -> Result<Tensor4> {
    if factor < 1 {
        return Err(Error::Config(format!("upsampling factor must be >= 1, got {factor}")));
    }
    if factor == 1 {
        return Ok(input.clone());
    }
    let [n, c, h, w] = input.dims();
    let (oh, ow) = (h * factor, w * factor);
    let mut out = Tensor4::zeros([n, c, oh, ow]);
    match method {
        Interpolation::Nearest => {
            for ni in 0..n {
                for ci in 0..c {
                    let src = input.plane(ni, ci);
                    let dst = out.plane_mut(ni, ci);
                    for i in 0..oh {
                        for j in 0..ow {
                            dst[i * ow + j] = src[(i / factor) * w + j / factor];
                        }
                    }
                }
            }
        }
        Interpolation::Bicubic => {
            let rows = cubic_taps(h, factor);
            let cols = cubic_taps(w, factor);
            let mut tmp = vec![0.0; h * ow];
            for ni in 0..n {
                for ci in 0..c {
                    let src = input.plane(ni, ci);
                    for i in 0..h {
                        for (j, (idx, wts)) in cols.iter().enumerate() {
                            tmp[i * ow + j] = (0..4).map(|m| wts[m] * src[i * w + idx[m]]).sum();
                        }
                    }
                    let dst = out.plane_mut(ni, ci);
                    for (i, (idx, wts)) in rows.iter().enumerate() {
                        for j in 0..ow {
                            dst[i * ow + j] = (0..4).map(|m| wts[m] * tmp[idx[m] * ow + j]).sum();
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}
