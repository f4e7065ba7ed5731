//! LAResNet: head LAConv + ReLU, a stack of residual blocks built from LAConv,
//! a tail LAConv, and a global residual connection to the upsampled LR input.

pub mod checkpoint;
mod config;
mod count;
mod loss;
mod network;

pub use config::{FusionSample, ModelConfig};
pub use count::{count_params, layer_param_count, LayerCount, ParamCount};
pub use loss::{loss_mse, MseLoss};
pub use network::{backward, forward, forward_with, init_params, LAResNetParams, NetworkGrads, NetworkState};
