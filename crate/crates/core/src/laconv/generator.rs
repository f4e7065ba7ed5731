use super::params::WeightGenerator;
use super::{from_pixel_rows, to_pixel_rows};
use crate::error::{Error, Result};
use crate::ops::{
    activation, activation_vjp, bias_grad, conv_cols, conv_cols_vjp, dense, dense_vjp, fold, unfold, Activation,
    Unfolded,
};
use crate::tensor::{ConvKernel, Matrix, PadMode, Tensor4};

/// Per-pixel kernel scaling weights, dims (n, k², h, w), every entry in (0, 1).
///
/// Channel `u·k + v` scales kernel tap (u, v) of every input and output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalWeights(pub Tensor4);

impl LocalWeights {
    pub fn tensor(&self) -> &Tensor4 {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor4 {
        self.0
    }
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct GeneratorTape {
    /// relu(conv) rearranged to one row per pixel, (n·h·w × k²)
    shallow: Matrix,
    /// relu(fc1)
    hidden: Matrix,
    /// sigmoid(fc2)
    weights: Matrix,
}

impl GeneratorTape {
    /// Appends the on/off state of every ReLU unit.
    pub(crate) fn push_relu_pattern(&self, out: &mut Vec<bool>) {
        out.extend(self.shallow.data().iter().chain(self.hidden.data()).map(|v| *v > 0.0));
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorGrads {
    pub input: Tensor4,
    pub generator: WeightGenerator,
}

pub(crate) fn check_generator(c_in: usize, k: usize, gen: &WeightGenerator) -> Result<()> {
    let kk = k * k;
    let ok = gen.conv.c_in() == c_in
        && gen.conv.c_out() == kk
        && gen.conv.k() == k
        && gen.conv_bias.len() == kk
        && gen.fc1.inputs() == kk
        && gen.fc1.outputs() == kk
        && gen.fc2.inputs() == kk
        && gen.fc2.outputs() == kk;
    if !ok {
        return Err(Error::Shape(format!(
            "weight generator does not fit c_in={c_in}, k={k} (conv {:?}, fc1 {}x{}, fc2 {}x{})",
            gen.conv.weights().dims(),
            gen.fc1.outputs(),
            gen.fc1.inputs(),
            gen.fc2.outputs(),
            gen.fc2.inputs()
        )));
    }
    Ok(())
}

fn generator_k(gen: &WeightGenerator) -> usize {
    gen.conv.k()
}

/// Runs the generator on already-unfolded input patches (patch size k).
pub(crate) fn generator_forward(cols: &Unfolded, gen: &WeightGenerator) -> Result<(LocalWeights, GeneratorTape)> {
    let (h, w) = cols.spatial();
    let pre = conv_cols(cols, gen.conv.as_matrix_data(), gen.conv.c_out(), Some(&gen.conv_bias));
    let shallow = to_pixel_rows(&activation(&pre, Activation::Relu));
    let hidden = activation(&dense(&shallow, &gen.fc1)?, Activation::Relu);
    let weights = activation(&dense(&hidden, &gen.fc2)?, Activation::Sigmoid);
    let local = LocalWeights(from_pixel_rows(&weights, cols.n(), h, w));
    Ok((
        local,
        GeneratorTape {
            shallow,
            hidden,
            weights,
        },
    ))
}

/// Returns (∂/∂cols, generator grads) given ∂L/∂weights.
pub(crate) fn generator_backward(
    cols: &Unfolded,
    gen: &WeightGenerator,
    tape: &GeneratorTape,
    d_weights: &Tensor4,
) -> Result<(Unfolded, WeightGenerator)> {
    let (h, w) = cols.spatial();
    let d_w_rows = to_pixel_rows(d_weights);
    let d_z2 = activation_vjp(&tape.weights, Activation::Sigmoid, &d_w_rows);
    let g2 = dense_vjp(&tape.hidden, &gen.fc2, &d_z2)?;
    let d_z1 = activation_vjp(&tape.hidden, Activation::Relu, &g2.input);
    let g1 = dense_vjp(&tape.shallow, &gen.fc1, &d_z1)?;
    let d_shallow = activation_vjp(&tape.shallow, Activation::Relu, &g1.input);
    let d_pre = from_pixel_rows(&d_shallow, cols.n(), h, w);
    let (dcols, dconv) = conv_cols_vjp(cols, gen.conv.as_matrix_data(), gen.conv.c_out(), &d_pre);
    let grads = WeightGenerator {
        conv: ConvKernel::new(Tensor4::from_vec(gen.conv.weights().dims(), dconv)?)?,
        conv_bias: bias_grad(&d_pre),
        fc1: crate::tensor::DenseLayer::new(g1.weight, g1.bias)?,
        fc2: crate::tensor::DenseLayer::new(g2.weight, g2.bias)?,
    };
    Ok((dcols, grads))
}

/// Per-pixel weights W[n, :, i, j] from the k×k patch around (i, j).
pub fn gen_local_weights(input: &Tensor4, gen: &WeightGenerator, pad: PadMode) -> Result<LocalWeights> {
    let k = generator_k(gen);
    check_generator(input.c(), k, gen)?;
    let cols = unfold(input, k, pad)?;
    Ok(generator_forward(&cols, gen)?.0)
}

pub fn gen_local_weights_vjp(
    input: &Tensor4,
    gen: &WeightGenerator,
    pad: PadMode,
    cotangent: &Tensor4,
) -> Result<GeneratorGrads> {
    let k = generator_k(gen);
    check_generator(input.c(), k, gen)?;
    cotangent.expect_dims([input.n(), k * k, input.h(), input.w()], "local weight cotangent")?;
    let cols = unfold(input, k, pad)?;
    let (_, tape) = generator_forward(&cols, gen)?;
    let (dcols, generator) = generator_backward(&cols, gen, &tape, cotangent)?;
    Ok(GeneratorGrads {
        input: fold(&dcols),
        generator,
    })
}
