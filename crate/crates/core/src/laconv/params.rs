use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::params::ParamSet;
use crate::rng::{fill_normal, SeededRng};
use crate::tensor::{ConvKernel, DenseLayer, Matrix, Tensor4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConvKind {
    Standard,
    LocalAdaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BiasKind {
    None,
    Static,
    Dynamic,
}

/// One cell of the {standard, local adaptive} × {no, static, dynamic bias} grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LAConvMode {
    pub conv: ConvKind,
    pub bias: BiasKind,
}

impl LAConvMode {
    pub const fn new(conv: ConvKind, bias: BiasKind) -> Self {
        LAConvMode { conv, bias }
    }

    /// The full network: local adaptive convolution with dynamic bias.
    pub const FULL: LAConvMode = LAConvMode::new(ConvKind::LocalAdaptive, BiasKind::Dynamic);

    /// The ablation grid, in table order.
    pub const ALL: [LAConvMode; 6] = [
        LAConvMode::new(ConvKind::Standard, BiasKind::None),
        LAConvMode::new(ConvKind::Standard, BiasKind::Static),
        LAConvMode::new(ConvKind::Standard, BiasKind::Dynamic),
        LAConvMode::new(ConvKind::LocalAdaptive, BiasKind::None),
        LAConvMode::new(ConvKind::LocalAdaptive, BiasKind::Static),
        LAConvMode::new(ConvKind::LocalAdaptive, BiasKind::Dynamic),
    ];

    pub fn label(self) -> &'static str {
        match (self.conv, self.bias) {
            (ConvKind::Standard, BiasKind::None) => "SC+NB",
            (ConvKind::Standard, BiasKind::Static) => "SC+CB",
            (ConvKind::Standard, BiasKind::Dynamic) => "SC+DYB",
            (ConvKind::LocalAdaptive, BiasKind::None) => "LAC+NB",
            (ConvKind::LocalAdaptive, BiasKind::Static) => "LAC+CB",
            (ConvKind::LocalAdaptive, BiasKind::Dynamic) => "LAC+DYB",
        }
    }
}

impl fmt::Display for LAConvMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for LAConvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_uppercase();
        LAConvMode::ALL
            .into_iter()
            .find(|m| m.label() == wanted)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown mode `{s}` (expected one of SC+NB, SC+CB, SC+DYB, LAC+NB, LAC+CB, LAC+DYB)"
                ))
            })
    }
}

/// Produces the per-pixel k² scaling weights: conv+ReLU, then two k²-wide
/// dense layers with ReLU and sigmoid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGenerator {
    /// (k² × c_in × k × k)
    pub conv: ConvKernel,
    pub conv_bias: Vec<f64>,
    pub fc1: DenseLayer,
    pub fc2: DenseLayer,
}

/// Produces one c_out bias vector per sample from the pooled input.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasGenerator {
    /// c_in → c_out, followed by ReLU
    pub fc1: DenseLayer,
    /// c_out → c_out, linear
    pub fc2: DenseLayer,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerBias {
    None,
    Static(Vec<f64>),
    Dynamic(BiasGenerator),
}

/// Every learnable tensor of one LAConv layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LAConvParams {
    pub main_kernel: ConvKernel,
    /// Present for local adaptive layers.
    pub generator: Option<WeightGenerator>,
    pub bias: LayerBias,
}

impl LAConvParams {
    /// All-zero parameters holding exactly the groups `mode` needs.
    pub fn zeros(c_in: usize, c_out: usize, k: usize, mode: LAConvMode) -> Result<Self> {
        let kk = k * k;
        let main_kernel = ConvKernel::zeros(c_out, c_in, k)?;
        let generator = match mode.conv {
            ConvKind::Standard => None,
            ConvKind::LocalAdaptive => Some(WeightGenerator {
                conv: ConvKernel::zeros(kk, c_in, k)?,
                conv_bias: vec![0.0; kk],
                fc1: DenseLayer::zeros(kk, kk),
                fc2: DenseLayer::zeros(kk, kk),
            }),
        };
        let bias = match mode.bias {
            BiasKind::None => LayerBias::None,
            BiasKind::Static => LayerBias::Static(vec![0.0; c_out]),
            BiasKind::Dynamic => LayerBias::Dynamic(BiasGenerator {
                fc1: DenseLayer::zeros(c_in, c_out),
                fc2: DenseLayer::zeros(c_out, c_out),
            }),
        };
        Ok(LAConvParams {
            main_kernel,
            generator,
            bias,
        })
    }

    /// He-normal weights (std √(2/fan_in)), zero biases.
    pub fn init(c_in: usize, c_out: usize, k: usize, mode: LAConvMode, rng: &mut SeededRng) -> Result<Self> {
        let mut p = LAConvParams::zeros(c_in, c_out, k, mode)?;
        let he = |fan_in: usize| (2.0 / fan_in as f64).sqrt();
        let kk = k * k;
        fill_normal(p.main_kernel.weights_mut().data_mut(), he(c_in * kk), rng);
        if let Some(g) = p.generator.as_mut() {
            fill_normal(g.conv.weights_mut().data_mut(), he(c_in * kk), rng);
            fill_normal(g.fc1.weight.data_mut(), he(kk), rng);
            fill_normal(g.fc2.weight.data_mut(), he(kk), rng);
        }
        if let LayerBias::Dynamic(d) = &mut p.bias {
            fill_normal(d.fc1.weight.data_mut(), he(c_in), rng);
            fill_normal(d.fc2.weight.data_mut(), he(c_out), rng);
        }
        Ok(p)
    }

    pub fn c_in(&self) -> usize {
        self.main_kernel.c_in()
    }

    pub fn c_out(&self) -> usize {
        self.main_kernel.c_out()
    }

    pub fn k(&self) -> usize {
        self.main_kernel.k()
    }

    /// The mode whose groups these parameters hold.
    pub fn mode(&self) -> LAConvMode {
        let conv = if self.generator.is_some() {
            ConvKind::LocalAdaptive
        } else {
            ConvKind::Standard
        };
        let bias = match self.bias {
            LayerBias::None => BiasKind::None,
            LayerBias::Static(_) => BiasKind::Static,
            LayerBias::Dynamic(_) => BiasKind::Dynamic,
        };
        LAConvMode { conv, bias }
    }

    /// Same structure, every value zero (gradient accumulator).
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }
}

fn vector_dims(v: &[f64]) -> [usize; 4] {
    [v.len(), 1, 1, 1]
}

fn matrix_dims(m: &Matrix) -> [usize; 4] {
    [m.rows(), m.cols(), 1, 1]
}

fn visit_dense(prefix: &str, d: &DenseLayer, f: &mut dyn FnMut(&str, [usize; 4], &[f64])) {
    f(&format!("{prefix}.weight"), matrix_dims(&d.weight), d.weight.data());
    f(&format!("{prefix}.bias"), vector_dims(&d.bias), &d.bias);
}

fn visit_dense_mut(prefix: &str, d: &mut DenseLayer, f: &mut dyn FnMut(&str, &mut [f64])) {
    f(&format!("{prefix}.weight"), d.weight.data_mut());
    f(&format!("{prefix}.bias"), &mut d.bias);
}

impl ParamSet for LAConvParams {
    fn visit(&self, f: &mut dyn FnMut(&str, [usize; 4], &[f64])) {
        let k: &Tensor4 = self.main_kernel.weights();
        f("main_kernel", k.dims(), k.data());
        if let LayerBias::Static(b) = &self.bias {
            f("static_bias", vector_dims(b), b);
        }
        if let Some(g) = &self.generator {
            f("wg_conv", g.conv.weights().dims(), g.conv.weights().data());
            f("wg_conv_bias", vector_dims(&g.conv_bias), &g.conv_bias);
            visit_dense("wg_fc1", &g.fc1, f);
            visit_dense("wg_fc2", &g.fc2, f);
        }
        if let LayerBias::Dynamic(d) = &self.bias {
            visit_dense("dyb_fc1", &d.fc1, f);
            visit_dense("dyb_fc2", &d.fc2, f);
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        f("main_kernel", self.main_kernel.weights_mut().data_mut());
        if let LayerBias::Static(b) = &mut self.bias {
            f("static_bias", b);
        }
        if let Some(g) = &mut self.generator {
            f("wg_conv", g.conv.weights_mut().data_mut());
            f("wg_conv_bias", &mut g.conv_bias);
            visit_dense_mut("wg_fc1", &mut g.fc1, f);
            visit_dense_mut("wg_fc2", &mut g.fc2, f);
        }
        if let LayerBias::Dynamic(d) = &mut self.bias {
            visit_dense_mut("dyb_fc1", &mut d.fc1, f);
            visit_dense_mut("dyb_fc2", &mut d.fc2, f);
        }
    }
}
