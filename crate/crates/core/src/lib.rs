//! Local adaptive convolution (LAConv) with dynamic bias, the LAResNet image
//! fusion network built from it, and the surrounding machinery: hand-derived
//! gradients, Adam training, fusion quality metrics and a reduced-resolution
//! data simulator.
//!
//! Everything runs on `f64` and on the CPU. Gradients are composed by hand per
//! network; there is no tape or graph engine.

pub mod datasim;
pub mod error;
mod gemm;
pub mod laconv;
pub mod laresnet;
pub mod metrics;
pub mod ops;
pub mod optim;
pub mod params;
pub mod rng;
pub mod tenfile;
pub mod tensor;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use params::ParamSet;
pub use tensor::{ConvKernel, DenseLayer, Matrix, PadMode, Tensor4};
