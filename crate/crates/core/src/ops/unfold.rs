//! Patch extraction (im2col) and its adjoint.
//!
//! Column `i·w + j` of a sample holds the k×k patch centred on pixel (i, j),
//! flattened channel-major and then row-major inside the patch, so that row
//! `ci·k² + u·k + v` corresponds to offset (u − r, v − r) with r = (k − 1)/2.

use crate::error::{Error, Result};
use crate::tensor::{check_odd_kernel, PadMode, Tensor4};

/// Unfolded patches of dims (n, c·k², h·w).
#[derive(Debug, Clone, PartialEq)]
pub struct Unfolded {
    n: usize,
    c: usize,
    k: usize,
    h: usize,
    w: usize,
    pad: PadMode,
    data: Vec<f64>,
}

impl Unfolded {
    pub(crate) fn zeros_like(other: &Unfolded) -> Self {
        Unfolded {
            data: vec![0.0; other.data.len()],
            ..*other
        }
    }

    pub(crate) fn with_data(&self, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        Unfolded { data, ..*self }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn channels(&self) -> usize {
        self.c
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pad(&self) -> PadMode {
        self.pad
    }

    /// Spatial dims of the image the patches were taken from.
    pub fn spatial(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    /// c·k²
    pub fn rows(&self) -> usize {
        self.c * self.k * self.k
    }

    /// h·w
    pub fn cols(&self) -> usize {
        self.h * self.w
    }

    /// Dims as (n, c·k², h·w).
    pub fn dims(&self) -> [usize; 3] {
        [self.n, self.rows(), self.cols()]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn sample(&self, n: usize) -> &[f64] {
        let len = self.rows() * self.cols();
        &self.data[n * len..(n + 1) * len]
    }

    pub fn sample_mut(&mut self, n: usize) -> &mut [f64] {
        let len = self.rows() * self.cols();
        &mut self.data[n * len..(n + 1) * len]
    }

    pub fn get(&self, n: usize, row: usize, col: usize) -> f64 {
        self.data[(n * self.rows() + row) * self.cols() + col]
    }
}

pub fn unfold(input: &Tensor4, k: usize, pad: PadMode) -> Result<Unfolded> {
    check_odd_kernel(k)?;
    let [n, c, h, w] = input.dims();
    if h == 0 || w == 0 {
        return Err(Error::Shape("unfold of an empty image".into()));
    }
    let r = (k / 2) as isize;
    let kk = k * k;
    let hw = h * w;
    let mut data = vec![0.0; n * c * kk * hw];
    for ni in 0..n {
        for ci in 0..c {
            let plane = input.plane(ni, ci);
            for u in 0..k {
                for v in 0..k {
                    let row = ci * kk + u * k + v;
                    let base = (ni * c * kk + row) * hw;
                    for i in 0..h {
                        let Some(si) = pad.resolve(i as isize + u as isize - r, h) else {
                            continue;
                        };
                        let src = &plane[si * w..(si + 1) * w];
                        let dst = &mut data[base + i * w..base + (i + 1) * w];
                        for (j, d) in dst.iter_mut().enumerate() {
                            if let Some(sj) = pad.resolve(j as isize + v as isize - r, w) {
                                *d = src[sj];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(Unfolded {
        n,
        c,
        k,
        h,
        w,
        pad,
        data,
    })
}

/// Adjoint of [`unfold`]: scatters every patch entry back onto the pixel it
/// was read from, summing overlaps.
pub fn fold(cols: &Unfolded) -> Tensor4 {
    let Unfolded { n, c, k, h, w, pad, .. } = *cols;
    let r = (k / 2) as isize;
    let kk = k * k;
    let hw = h * w;
    let mut out = Tensor4::zeros([n, c, h, w]);
    for ni in 0..n {
        for ci in 0..c {
            let plane = out.plane_mut(ni, ci);
            for u in 0..k {
                for v in 0..k {
                    let row = ci * kk + u * k + v;
                    let base = (ni * c * kk + row) * hw;
                    for i in 0..h {
                        let Some(si) = pad.resolve(i as isize + u as isize - r, h) else {
                            continue;
                        };
                        let src = &cols.data[base + i * w..base + (i + 1) * w];
                        for (j, &s) in src.iter().enumerate() {
                            if let Some(sj) = pad.resolve(j as isize + v as isize - r, w) {
                                plane[si * w + sj] += s;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}
