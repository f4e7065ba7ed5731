//! Stride-1, size-preserving 2-D convolution (cross-correlation) via unfold + GEMM.

use super::unfold::{fold, unfold, Unfolded};
use crate::error::{Error, Result};
use crate::gemm;
use crate::tensor::{ConvKernel, PadMode, Tensor4};

/// Gradients of a scalar probe w.r.t. the operands of [`conv2d`].
#[derive(Debug, Clone)]
pub struct Conv2dGrads {
    pub input: Tensor4,
    pub kernel: Tensor4,
    pub bias: Option<Vec<f64>>,
}

pub fn conv2d(input: &Tensor4, kernel: &ConvKernel, bias: Option<&[f64]>, pad: PadMode) -> Result<Tensor4> {
    check_operands(input, kernel, bias)?;
    let cols = unfold(input, kernel.k(), pad)?;
    Ok(conv_cols(&cols, kernel.as_matrix_data(), kernel.c_out(), bias))
}

pub fn conv2d_vjp(
    input: &Tensor4,
    kernel: &ConvKernel,
    with_bias: bool,
    pad: PadMode,
    cotangent: &Tensor4,
) -> Result<Conv2dGrads> {
    check_operands(input, kernel, None)?;
    cotangent.expect_dims([input.n(), kernel.c_out(), input.h(), input.w()], "conv2d cotangent")?;
    let cols = unfold(input, kernel.k(), pad)?;
    let (dcols, dkernel) = conv_cols_vjp(&cols, kernel.as_matrix_data(), kernel.c_out(), cotangent);
    let kernel_grad = Tensor4::from_vec(kernel.weights().dims(), dkernel)?;
    Ok(Conv2dGrads {
        input: fold(&dcols),
        kernel: kernel_grad,
        bias: with_bias.then(|| bias_grad(cotangent)),
    })
}

fn check_operands(input: &Tensor4, kernel: &ConvKernel, bias: Option<&[f64]>) -> Result<()> {
    if input.c() != kernel.c_in() {
        return Err(Error::Shape(format!(
            "conv2d: input has {} channels, kernel expects {}",
            input.c(),
            kernel.c_in()
        )));
    }
    if let Some(b) = bias {
        if b.len() != kernel.c_out() {
            return Err(Error::Shape(format!(
                "conv2d: bias length {} != c_out {}",
                b.len(),
                kernel.c_out()
            )));
        }
    }
    Ok(())
}

/// out[n] = K · cols[n] (+ bias), with K laid out (c_out × c·k²).
pub(crate) fn conv_cols(cols: &Unfolded, kernel: &[f64], c_out: usize, bias: Option<&[f64]>) -> Tensor4 {
    let (h, w) = cols.spatial();
    let (rows, hw) = (cols.rows(), cols.cols());
    let mut out = Tensor4::zeros([cols.n(), c_out, h, w]);
    for ni in 0..cols.n() {
        let dst = out.sample_mut(ni);
        if let Some(b) = bias {
            for (co, chunk) in dst.chunks_mut(hw).enumerate() {
                chunk.fill(b[co]);
            }
        }
        gemm::matmul(kernel, cols.sample(ni), c_out, rows, hw, dst);
    }
    out
}

/// Returns (∂/∂cols, ∂/∂K) for the map in [`conv_cols`].
pub(crate) fn conv_cols_vjp(
    cols: &Unfolded,
    kernel: &[f64],
    c_out: usize,
    cotangent: &Tensor4,
) -> (Unfolded, Vec<f64>) {
    let (rows, hw) = (cols.rows(), cols.cols());
    let mut dcols = Unfolded::zeros_like(cols);
    let mut dkernel = vec![0.0; c_out * rows];
    // accumulate in sample order for reproducibility
    for ni in 0..cols.n() {
        let g = cotangent.sample(ni);
        gemm::matmul_a_bt(g, cols.sample(ni), c_out, hw, rows, &mut dkernel);
        gemm::matmul_at_b(kernel, g, c_out, rows, hw, dcols.sample_mut(ni));
    }
    (dcols, dkernel)
}

/// Sum of the cotangent over samples and pixels, per output channel.
pub(crate) fn bias_grad(cotangent: &Tensor4) -> Vec<f64> {
    let mut g = vec![0.0; cotangent.c()];
    for ni in 0..cotangent.n() {
        for (co, gc) in g.iter_mut().enumerate() {
            *gc += cotangent.plane(ni, co).iter().sum::<f64>();
        }
    }
    g
}
