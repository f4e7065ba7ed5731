//! Differentiable primitives, each with a forward map and an exact VJP.

mod activation;
mod combine;
mod conv;
mod dense;
mod pool;
mod unfold;
mod upsample;

pub use activation::{activation, activation_vjp, Activation, Elementwise};
pub use combine::{add, concat_channels, split_channels};
pub(crate) use conv::{bias_grad, conv_cols, conv_cols_vjp};
pub use conv::{conv2d, conv2d_vjp, Conv2dGrads};
pub use dense::{dense, dense_vjp, DenseGrads};
pub use pool::{global_avg_pool, global_avg_pool_vjp};
pub use unfold::{fold, unfold, Unfolded};
pub use upsample::{upsample, Interpolation};
