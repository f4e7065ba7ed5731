//! Dense value carriers: the rank-4 feature tensor, the row-major matrix used by
//! fully-connected layers, and the two parameter containers built on them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Spatial boundary handling for patch extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PadMode {
    #[default]
    Zero,
    /// Wrap-around; makes every convolution exactly shift-equivariant.
    Circular,
}

impl PadMode {
    /// Maps a possibly out-of-range coordinate into `0..len`, or `None` when the
    /// padded value is zero.
    #[inline]
    pub(crate) fn resolve(self, idx: isize, len: usize) -> Option<usize> {
        match self {
            PadMode::Zero => {
                if idx < 0 || idx as usize >= len {
                    None
                } else {
                    Some(idx as usize)
                }
            }
            PadMode::Circular => Some(idx.rem_euclid(len as isize) as usize),
        }
    }
}

impl fmt::Display for PadMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PadMode::Zero => "zero",
            PadMode::Circular => "circular",
        })
    }
}

impl FromStr for PadMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zero" => Ok(PadMode::Zero),
            "circular" => Ok(PadMode::Circular),
            other => Err(Error::Config(format!("unknown pad mode `{other}`"))),
        }
    }
}

/// Dense rank-4 array in (sample, channel, height, width) order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dims: [usize; 4],
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dims: [usize; 4]) -> Self {
        Tensor4 {
            dims,
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn filled(dims: [usize; 4], value: f64) -> Self {
        Tensor4 {
            dims,
            data: vec![value; dims.iter().product()],
        }
    }

    pub fn from_vec(dims: [usize; 4], data: Vec<f64>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "tensor of dims {dims:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor4 { dims, data })
    }

    pub fn from_fn(dims: [usize; 4], mut f: impl FnMut([usize; 4]) -> f64) -> Self {
        let mut data = Vec::with_capacity(dims.iter().product());
        for n in 0..dims[0] {
            for c in 0..dims[1] {
                for h in 0..dims[2] {
                    for w in 0..dims[3] {
                        data.push(f([n, c, h, w]));
                    }
                }
            }
        }
        Tensor4 { dims, data }
    }

    #[inline]
    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.dims[0]
    }

    #[inline]
    pub fn c(&self) -> usize {
        self.dims[1]
    }

    #[inline]
    pub fn h(&self) -> usize {
        self.dims[2]
    }

    #[inline]
    pub fn w(&self) -> usize {
        self.dims[3]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn offset(&self, idx: [usize; 4]) -> usize {
        let [_, c, h, w] = self.dims;
        ((idx[0] * c + idx[1]) * h + idx[2]) * w + idx[3]
    }

    #[inline]
    pub fn get(&self, idx: [usize; 4]) -> f64 {
        self.data[self.offset(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: [usize; 4], value: f64) {
        let o = self.offset(idx);
        self.data[o] = value;
    }

    /// Contiguous h·w plane of one (sample, channel).
    pub fn plane(&self, n: usize, c: usize) -> &[f64] {
        let hw = self.h() * self.w();
        let start = (n * self.c() + c) * hw;
        &self.data[start..start + hw]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [f64] {
        let hw = self.h() * self.w();
        let start = (n * self.c() + c) * hw;
        &mut self.data[start..start + hw]
    }

    /// Contiguous c·h·w block of one sample.
    pub fn sample(&self, n: usize) -> &[f64] {
        let chw = self.c() * self.h() * self.w();
        &self.data[n * chw..(n + 1) * chw]
    }

    pub fn sample_mut(&mut self, n: usize) -> &mut [f64] {
        let chw = self.c() * self.h() * self.w();
        &mut self.data[n * chw..(n + 1) * chw]
    }

    /// Copy of samples `start..start + count`.
    pub fn slice_samples(&self, start: usize, count: usize) -> Result<Tensor4> {
        if start + count > self.n() {
            return Err(Error::Shape(format!(
                "sample range {start}..{} out of bounds for batch of {}",
                start + count,
                self.n()
            )));
        }
        let chw = self.c() * self.h() * self.w();
        Tensor4::from_vec(
            [count, self.c(), self.h(), self.w()],
            self.data[start * chw..(start + count) * chw].to_vec(),
        )
    }

    /// Concatenates tensors along the sample axis.
    pub fn stack_samples(parts: &[&Tensor4]) -> Result<Tensor4> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Shape("cannot stack zero tensors".into()))?;
        let [_, c, h, w] = first.dims;
        let mut data = Vec::new();
        let mut n = 0;
        for p in parts {
            if p.c() != c || p.h() != h || p.w() != w {
                return Err(Error::Shape(format!("cannot stack {:?} with {:?}", p.dims, first.dims)));
            }
            n += p.n();
            data.extend_from_slice(&p.data);
        }
        Tensor4::from_vec([n, c, h, w], data)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor4 {
        Tensor4 {
            dims: self.dims,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Tensor4, f: impl Fn(f64, f64) -> f64) -> Result<Tensor4> {
        self.expect_dims(other.dims, "zip_map")?;
        Ok(Tensor4 {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add_assign(&mut self, other: &Tensor4) -> Result<()> {
        self.expect_dims(other.dims, "add_assign")?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn scale(&self, s: f64) -> Tensor4 {
        self.map(|x| x * s)
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Tensor4) -> Result<f64> {
        self.expect_dims(other.dims, "dot")?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn max_abs_diff(&self, other: &Tensor4) -> Result<f64> {
        self.expect_dims(other.dims, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Circular shift of both spatial axes by (dy, dx).
    pub fn roll(&self, dy: isize, dx: isize) -> Tensor4 {
        let [n, c, h, w] = self.dims;
        Tensor4::from_fn([n, c, h, w], |[ni, ci, i, j]| {
            let si = (i as isize - dy).rem_euclid(h as isize) as usize;
            let sj = (j as isize - dx).rem_euclid(w as isize) as usize;
            self.get([ni, ci, si, sj])
        })
    }

    pub(crate) fn expect_dims(&self, dims: [usize; 4], what: &str) -> Result<()> {
        if self.dims != dims {
            return Err(Error::Shape(format!(
                "{what}: dims {:?} do not match {:?}",
                self.dims, dims
            )));
        }
        Ok(())
    }
}

/// Row-major matrix; rows index samples or pixels, columns index features.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Matrix::zeros(size, size);
        for i in 0..size {
            m.data[i * size + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

/// Bank of `c_out` kernels of size `c_in × k × k`, with odd `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    weights: Tensor4,
}

impl ConvKernel {
    pub fn new(weights: Tensor4) -> Result<Self> {
        let [_, _, kh, kw] = weights.dims();
        if kh != kw {
            return Err(Error::Config(format!("kernel must be square, got {kh}x{kw}")));
        }
        check_odd_kernel(kh)?;
        Ok(ConvKernel { weights })
    }

    pub fn zeros(c_out: usize, c_in: usize, k: usize) -> Result<Self> {
        ConvKernel::new(Tensor4::zeros([c_out, c_in, k, k]))
    }

    #[inline]
    pub fn c_out(&self) -> usize {
        self.weights.n()
    }

    #[inline]
    pub fn c_in(&self) -> usize {
        self.weights.c()
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.weights.h()
    }

    pub fn weights(&self) -> &Tensor4 {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Tensor4 {
        &mut self.weights
    }

    /// Kernel viewed as a (c_out × c_in·k²) matrix, row-major.
    pub fn as_matrix_data(&self) -> &[f64] {
        self.weights.data()
    }
}

pub(crate) fn check_odd_kernel(k: usize) -> Result<()> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::Config(format!("kernel size must be odd and >= 1, got {k}")));
    }
    Ok(())
}

/// Fully-connected layer computing `x·Wᵀ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// (out × in)
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::Shape(format!(
                "dense bias length {} does not match {} outputs",
                bias.len(),
                weight.rows()
            )));
        }
        Ok(DenseLayer { weight, bias })
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        DenseLayer {
            weight: Matrix::zeros(outputs, inputs),
            bias: vec![0.0; outputs],
        }
    }

    #[inline]
    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    #[inline]
    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }
}
