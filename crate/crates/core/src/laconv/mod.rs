//! Local adaptive convolution: a convolution whose k×k kernel is rescaled at
//! every pixel by weights generated from that pixel's own patch, optionally
//! followed by a per-sample bias generated from the globally pooled input.

mod dyb;
mod generator;
mod layer;
mod modulated;
mod params;

pub use dyb::{dynamic_bias, dynamic_bias_vjp, DynamicBiasGrads};
pub use generator::{gen_local_weights, gen_local_weights_vjp, GeneratorGrads, LocalWeights};
pub use layer::{laconv_forward, laconv_forward_with, laconv_vjp, ForwardState, LAConvGrads};
pub use modulated::{modulated_conv, modulated_conv_vjp, ModulatedGrads};
pub use params::{BiasGenerator, BiasKind, ConvKind, LAConvMode, LAConvParams, LayerBias, WeightGenerator};

use crate::tensor::{Matrix, Tensor4};

/// (n, c, h, w) → matrix with one row per pixel (row `n·h·w + i·w + j`) and
/// one column per channel.
pub(crate) fn to_pixel_rows(t: &Tensor4) -> Matrix {
    let [n, c, h, w] = t.dims();
    let hw = h * w;
    let mut m = Matrix::zeros(n * hw, c);
    let out = m.data_mut();
    for ni in 0..n {
        for ci in 0..c {
            for (p, &v) in t.plane(ni, ci).iter().enumerate() {
                out[(ni * hw + p) * c + ci] = v;
            }
        }
    }
    m
}

/// Inverse of [`to_pixel_rows`].
pub(crate) fn from_pixel_rows(m: &Matrix, n: usize, h: usize, w: usize) -> Tensor4 {
    let c = m.cols();
    let hw = h * w;
    let mut t = Tensor4::zeros([n, c, h, w]);
    let src = m.data();
    for ni in 0..n {
        for ci in 0..c {
            for (p, v) in t.plane_mut(ni, ci).iter_mut().enumerate() {
                *v = src[(ni * hw + p) * c + ci];
            }
        }
    }
    t
}
