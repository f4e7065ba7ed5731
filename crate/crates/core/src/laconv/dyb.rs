use super::params::BiasGenerator;
use crate::error::{Error, Result};
use crate::ops::{activation, activation_vjp, dense, dense_vjp, global_avg_pool, global_avg_pool_vjp, Activation};
use crate::tensor::{DenseLayer, Matrix, Tensor4};

#[derive(Debug, Clone)]
pub struct DynamicBiasGrads {
    pub input: Tensor4,
    pub generator: BiasGenerator,
}

#[derive(Debug, Clone)]
pub(crate) struct BiasTape {
    pooled: Matrix,
    hidden: Matrix,
}

impl BiasTape {
    pub(crate) fn push_relu_pattern(&self, out: &mut Vec<bool>) {
        out.extend(self.hidden.data().iter().map(|v| *v > 0.0));
    }
}

pub(crate) fn check_bias_generator(c_in: usize, c_out: usize, gen: &BiasGenerator) -> Result<()> {
    let ok = gen.fc1.inputs() == c_in
        && gen.fc1.outputs() == c_out
        && gen.fc2.inputs() == c_out
        && gen.fc2.outputs() == c_out;
    if !ok {
        return Err(Error::Shape(format!(
            "bias generator ({}→{}, {}→{}) does not fit c_in={c_in}, c_out={c_out}",
            gen.fc1.inputs(),
            gen.fc1.outputs(),
            gen.fc2.inputs(),
            gen.fc2.outputs()
        )));
    }
    Ok(())
}

pub(crate) fn bias_forward(input: &Tensor4, gen: &BiasGenerator) -> Result<(Matrix, BiasTape)> {
    let pooled = global_avg_pool(input)?;
    let hidden = activation(&dense(&pooled, &gen.fc1)?, Activation::Relu);
    let bias = dense(&hidden, &gen.fc2)?;
    Ok((bias, BiasTape { pooled, hidden }))
}

pub(crate) fn bias_backward(
    input_dims: [usize; 4],
    gen: &BiasGenerator,
    tape: &BiasTape,
    d_bias: &Matrix,
) -> Result<(Tensor4, BiasGenerator)> {
    let g2 = dense_vjp(&tape.hidden, &gen.fc2, d_bias)?;
    let d_z1 = activation_vjp(&tape.hidden, Activation::Relu, &g2.input);
    let g1 = dense_vjp(&tape.pooled, &gen.fc1, &d_z1)?;
    let d_input = global_avg_pool_vjp(&g1.input, input_dims[2], input_dims[3])?;
    Ok((
        d_input,
        BiasGenerator {
            fc1: DenseLayer::new(g1.weight, g1.bias)?,
            fc2: DenseLayer::new(g2.weight, g2.bias)?,
        },
    ))
}

/// One c_out bias vector per sample, (n × c_out), generated from the spatial
/// mean of the input. The result is broadcast over every pixel when added.
pub fn dynamic_bias(input: &Tensor4, gen: &BiasGenerator) -> Result<Matrix> {
    check_bias_generator(input.c(), gen.fc1.outputs(), gen)?;
    Ok(bias_forward(input, gen)?.0)
}

pub fn dynamic_bias_vjp(input: &Tensor4, gen: &BiasGenerator, cotangent: &Matrix) -> Result<DynamicBiasGrads> {
    check_bias_generator(input.c(), gen.fc1.outputs(), gen)?;
    let (_, tape) = bias_forward(input, gen)?;
    let (input_grad, generator) = bias_backward(input.dims(), gen, &tape, cotangent)?;
    Ok(DynamicBiasGrads {
        input: input_grad,
        generator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laconv::{LAConvMode, LAConvParams, LayerBias};
    use crate::rng::seeded;
    use crate::testutil::{check_close, finite_diff, random_matrix, random_tensor};

    fn generator(c_in: usize, c_out: usize, seed: u64) -> BiasGenerator {
        match LAConvParams::init(c_in, c_out, 3, LAConvMode::FULL, &mut seeded(seed))
            .unwrap()
            .bias
        {
            LayerBias::Dynamic(g) => g,
            _ => unreachable!(),
        }
    }

    #[test]
    fn zero_input_gives_zero_bias() {
        let gen = generator(3, 4, 1);
        let d = dynamic_bias(&Tensor4::zeros([2, 3, 4, 4]), &gen).unwrap();
        assert!(d.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn different_means_give_different_bias() {
        let gen = generator(2, 3, 2);
        let a = dynamic_bias(&Tensor4::filled([1, 2, 4, 4], 0.3), &gen).unwrap();
        let b = dynamic_bias(&Tensor4::filled([1, 2, 4, 4], 0.9), &gen).unwrap();
        assert!(a.data().iter().zip(b.data()).any(|(x, y)| (x - y).abs() > 1e-6));
    }

    #[test]
    fn invariant_under_spatial_permutation() {
        let gen = generator(2, 3, 3);
        let x = random_tensor([1, 2, 4, 4], 4);
        // reverse pixel order within every plane
        let mut y = x.clone();
        for c in 0..2 {
            y.plane_mut(0, c).reverse();
        }
        let a = dynamic_bias(&x, &gen).unwrap();
        let b = dynamic_bias(&y, &gen).unwrap();
        for (p, q) in a.data().iter().zip(b.data()) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn vjp_matches_finite_differences() {
        let mut gen = generator(3, 4, 5);
        gen.fc1.bias = vec![0.1, -0.05, 0.2, 0.0];
        let x = random_tensor([2, 3, 4, 5], 6);
        let g = random_matrix(2, 4, 7);
        let probe = |x: &Tensor4| -> f64 {
            dynamic_bias(x, &gen)
                .unwrap()
                .data()
                .iter()
                .zip(g.data())
                .map(|(a, b)| a * b)
                .sum()
        };
        let an = dynamic_bias_vjp(&x, &gen, &g).unwrap();
        let fd = finite_diff(x.data(), |d| probe(&Tensor4::from_vec(x.dims(), d.to_vec()).unwrap()));
        check_close(an.input.data(), &fd, "dyb input");
        let fd = finite_diff(gen.fc1.weight.data(), |d| {
            let mut g2 = gen.clone();
            g2.fc1.weight.data_mut().copy_from_slice(d);
            dynamic_bias(&x, &g2)
                .unwrap()
                .data()
                .iter()
                .zip(g.data())
                .map(|(a, b)| a * b)
                .sum()
        });
        check_close(an.generator.fc1.weight.data(), &fd, "dyb fc1");
    }
}
