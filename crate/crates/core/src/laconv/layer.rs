//! The fused LAConv layer: convolution part (standard or local adaptive) plus
//! bias part (none, static, or dynamic), with a hand-composed VJP.

use super::dyb::{bias_backward, bias_forward, check_bias_generator, BiasTape};
use super::generator::{check_generator, generator_backward, generator_forward, GeneratorTape};
use super::modulated::{modulate, modulated_backward};
use super::params::{BiasKind, ConvKind, LAConvMode, LAConvParams, LayerBias};
use crate::error::{Error, Result};
use crate::ops::{bias_grad, conv_cols, conv_cols_vjp, fold, unfold, Unfolded};
use crate::tensor::{ConvKernel, Matrix, PadMode, Tensor4};

#[derive(Debug, Clone)]
struct Saved {
    input_dims: [usize; 4],
    cols: Unfolded,
    adaptive: Option<(Tensor4, Unfolded, GeneratorTape)>,
    dynamic: Option<BiasTape>,
}

/// What a forward pass leaves behind for [`laconv_vjp`]. Empty unless the
/// forward was asked to retain its intermediates.
#[derive(Debug, Clone)]
pub struct ForwardState {
    mode: LAConvMode,
    pad: PadMode,
    saved: Option<Saved>,
}

impl ForwardState {
    pub fn is_retained(&self) -> bool {
        self.saved.is_some()
    }

    pub fn mode(&self) -> LAConvMode {
        self.mode
    }

    pub fn pad(&self) -> PadMode {
        self.pad
    }

    /// Per-pixel weights of a local adaptive forward pass, if retained.
    pub fn local_weights(&self) -> Option<&Tensor4> {
        self.saved.as_ref()?.adaptive.as_ref().map(|(w, _, _)| w)
    }

    /// On/off state of the ReLUs inside the weight and bias generators.
    pub(crate) fn push_relu_pattern(&self, out: &mut Vec<bool>) {
        if let Some(saved) = &self.saved {
            if let Some((_, _, tape)) = &saved.adaptive {
                tape.push_relu_pattern(out);
            }
            if let Some(tape) = &saved.dynamic {
                tape.push_relu_pattern(out);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LAConvGrads {
    pub input: Tensor4,
    /// Same structure as the layer parameters; groups unused by the mode stay zero.
    pub params: LAConvParams,
}

fn validate(input: &Tensor4, params: &LAConvParams, mode: LAConvMode) -> Result<()> {
    if input.c() != params.c_in() {
        return Err(Error::Shape(format!(
            "LAConv layer expects {} input channels, got {}",
            params.c_in(),
            input.c()
        )));
    }
    if mode.conv == ConvKind::LocalAdaptive {
        let gen = params
            .generator
            .as_ref()
            .ok_or_else(|| Error::Config(format!("mode {mode} needs a weight generator")))?;
        check_generator(params.c_in(), params.k(), gen)?;
    }
    match (mode.bias, &params.bias) {
        (BiasKind::None, _) => {}
        (BiasKind::Static, LayerBias::Static(b)) => {
            if b.len() != params.c_out() {
                return Err(Error::Shape(format!(
                    "static bias has {} entries for {} outputs",
                    b.len(),
                    params.c_out()
                )));
            }
        }
        (BiasKind::Dynamic, LayerBias::Dynamic(g)) => check_bias_generator(params.c_in(), params.c_out(), g)?,
        (BiasKind::Static, _) => return Err(Error::Config(format!("mode {mode} needs a static bias"))),
        (BiasKind::Dynamic, _) => return Err(Error::Config(format!("mode {mode} needs a bias generator"))),
    }
    Ok(())
}

pub fn laconv_forward(input: &Tensor4, params: &LAConvParams, mode: LAConvMode, pad: PadMode) -> Result<Tensor4> {
    Ok(laconv_forward_with(input, params, mode, pad, false)?.0)
}

/// Forward pass; with `retain` the returned state supports [`laconv_vjp`].
pub fn laconv_forward_with(
    input: &Tensor4,
    params: &LAConvParams,
    mode: LAConvMode,
    pad: PadMode,
    retain: bool,
) -> Result<(Tensor4, ForwardState)> {
    validate(input, params, mode)?;
    let kernel = &params.main_kernel;
    let cols = unfold(input, kernel.k(), pad)?;
    let static_bias = match (&params.bias, mode.bias) {
        (LayerBias::Static(b), BiasKind::Static) => Some(b.as_slice()),
        _ => None,
    };

    let (mut out, adaptive) = match mode.conv {
        ConvKind::Standard => (
            conv_cols(&cols, kernel.as_matrix_data(), kernel.c_out(), static_bias),
            None,
        ),
        ConvKind::LocalAdaptive => {
            let gen = params.generator.as_ref().expect("validated");
            let (weights, tape) = generator_forward(&cols, gen)?;
            let weights = weights.into_tensor();
            let scaled = modulate(&cols, &weights);
            let out = conv_cols(&scaled, kernel.as_matrix_data(), kernel.c_out(), static_bias);
            (out, Some((weights, scaled, tape)))
        }
    };

    let dynamic = match (&params.bias, mode.bias) {
        (LayerBias::Dynamic(gen), BiasKind::Dynamic) => {
            let (bias, tape) = bias_forward(input, gen)?;
            add_per_sample_bias(&mut out, &bias);
            Some(tape)
        }
        _ => None,
    };

    let saved = retain.then(|| Saved {
        input_dims: input.dims(),
        cols,
        adaptive,
        dynamic,
    });
    Ok((out, ForwardState { mode, pad, saved }))
}

fn add_per_sample_bias(out: &mut Tensor4, bias: &Matrix) {
    for ni in 0..out.n() {
        for co in 0..out.c() {
            let b = bias.get(ni, co);
            out.plane_mut(ni, co).iter_mut().for_each(|v| *v += b);
        }
    }
}

/// Exact VJP of the layer for the forward pass that produced `state`.
pub fn laconv_vjp(params: &LAConvParams, state: &ForwardState, cotangent: &Tensor4) -> Result<LAConvGrads> {
    let saved = state
        .saved
        .as_ref()
        .ok_or_else(|| Error::Usage("laconv_vjp needs a forward pass run with retain = true".into()))?;
    let [n, _, h, w] = saved.input_dims;
    cotangent.expect_dims([n, params.c_out(), h, w], "LAConv cotangent")?;
    let mode = state.mode;
    let kernel = &params.main_kernel;
    let mut grads = params.zeros_like();

    let d_cols = match &saved.adaptive {
        None => {
            let (d_cols, d_kernel) = conv_cols_vjp(&saved.cols, kernel.as_matrix_data(), kernel.c_out(), cotangent);
            set_kernel(&mut grads.main_kernel, d_kernel);
            d_cols
        }
        Some((weights, scaled, tape)) => {
            let (mut d_cols, d_weights, d_kernel) = modulated_backward(&saved.cols, scaled, weights, kernel, cotangent);
            set_kernel(&mut grads.main_kernel, d_kernel);
            let gen = params.generator.as_ref().expect("validated at forward");
            let (d_cols_gen, d_gen) = generator_backward(&saved.cols, gen, tape, &d_weights)?;
            for (a, b) in d_cols.data_mut().iter_mut().zip(d_cols_gen.data()) {
                *a += b;
            }
            grads.generator = Some(d_gen);
            d_cols
        }
    };

    let mut d_input = fold(&d_cols);
    match (&params.bias, mode.bias, &saved.dynamic) {
        (LayerBias::Static(_), BiasKind::Static, _) => {
            grads.bias = LayerBias::Static(bias_grad(cotangent));
        }
        (LayerBias::Dynamic(gen), BiasKind::Dynamic, Some(tape)) => {
            let d_bias = per_sample_bias_grad(cotangent);
            let (d_in, d_gen) = bias_backward(saved.input_dims, gen, tape, &d_bias)?;
            d_input.add_assign(&d_in)?;
            grads.bias = LayerBias::Dynamic(d_gen);
        }
        _ => {}
    }
    Ok(LAConvGrads {
        input: d_input,
        params: grads,
    })
}

fn set_kernel(dst: &mut ConvKernel, values: Vec<f64>) {
    dst.weights_mut().data_mut().copy_from_slice(&values);
}

/// (n × c_out): cotangent summed over pixels, per sample.
fn per_sample_bias_grad(cotangent: &Tensor4) -> Matrix {
    let mut m = Matrix::zeros(cotangent.n(), cotangent.c());
    for ni in 0..cotangent.n() {
        for co in 0..cotangent.c() {
            m.set(ni, co, cotangent.plane(ni, co).iter().sum());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{conv2d, conv2d_vjp};
    use crate::params::ParamSet;
    use crate::rng::seeded;
    use crate::testutil::{check_close, finite_diff, random_tensor};

    /// Random parameters with non-zero biases so every group carries signal.
    fn params(c_in: usize, c_out: usize, mode: LAConvMode, seed: u64) -> LAConvParams {
        let mut p = LAConvParams::init(c_in, c_out, 3, mode, &mut seeded(seed)).unwrap();
        let mut r = seeded(seed + 1000);
        p.visit_mut(&mut |name, v| {
            if name.ends_with("bias") {
                crate::rng::fill_normal(v, 0.1, &mut r);
            }
        });
        p
    }

    #[test]
    fn standard_no_bias_is_plain_convolution() {
        let x = random_tensor([2, 3, 7, 6], 1);
        let p = params(3, 4, LAConvMode::ALL[0], 2);
        for pad in [PadMode::Zero, PadMode::Circular] {
            let a = laconv_forward(&x, &p, LAConvMode::ALL[0], pad).unwrap();
            let b = conv2d(&x, &p.main_kernel, None, pad).unwrap();
            assert_eq!(a, b);
        }
        let g = random_tensor([2, 4, 7, 6], 3);
        let (_, st) = laconv_forward_with(&x, &p, LAConvMode::ALL[0], PadMode::Zero, true).unwrap();
        let ours = laconv_vjp(&p, &st, &g).unwrap();
        let plain = conv2d_vjp(&x, &p.main_kernel, false, PadMode::Zero, &g).unwrap();
        assert_eq!(ours.input, plain.input);
        assert_eq!(ours.params.main_kernel.weights(), &plain.kernel);
    }

    #[test]
    fn missing_groups_are_config_errors() {
        let x = random_tensor([1, 2, 4, 4], 1);
        let sc = params(2, 2, LAConvMode::ALL[0], 1);
        for mode in [LAConvMode::FULL, LAConvMode::ALL[1], LAConvMode::ALL[2]] {
            assert!(matches!(
                laconv_forward(&x, &sc, mode, PadMode::Zero),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn vjp_requires_retained_state() {
        let x = random_tensor([1, 2, 4, 4], 1);
        let p = params(2, 2, LAConvMode::FULL, 1);
        let (y, st) = laconv_forward_with(&x, &p, LAConvMode::FULL, PadMode::Zero, false).unwrap();
        assert!(!st.is_retained());
        assert!(matches!(laconv_vjp(&p, &st, &y), Err(Error::Usage(_))));
    }

    #[test]
    fn zero_cotangent_gives_zero_gradients() {
        let x = random_tensor([2, 2, 4, 4], 1);
        let p = params(2, 3, LAConvMode::FULL, 2);
        let (_, st) = laconv_forward_with(&x, &p, LAConvMode::FULL, PadMode::Zero, true).unwrap();
        let g = laconv_vjp(&p, &st, &Tensor4::zeros([2, 3, 4, 4])).unwrap();
        assert!(g.input.data().iter().all(|&v| v == 0.0));
        assert!(g.params.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn every_mode_matches_finite_differences() {
        for (i, mode) in LAConvMode::ALL.into_iter().enumerate() {
            let seed = 10 * i as u64;
            let x = random_tensor([2, 3, 5, 5], seed);
            let p = params(3, 4, mode, seed + 1);
            let g = random_tensor([2, 4, 5, 5], seed + 2);
            let pad = if i % 2 == 0 { PadMode::Zero } else { PadMode::Circular };
            let (_, st) = laconv_forward_with(&x, &p, mode, pad, true).unwrap();
            let an = laconv_vjp(&p, &st, &g).unwrap();

            let fd = finite_diff(x.data(), |d| {
                let x = Tensor4::from_vec(x.dims(), d.to_vec()).unwrap();
                laconv_forward(&x, &p, mode, pad).unwrap().dot(&g).unwrap()
            });
            check_close(an.input.data(), &fd, &format!("{mode} input"));

            let flat = p.flatten();
            let fd = finite_diff(&flat, |d| {
                let mut q = p.clone();
                q.assign_flat(d);
                laconv_forward(&x, &q, mode, pad).unwrap().dot(&g).unwrap()
            });
            check_close(&an.params.flatten(), &fd, &format!("{mode} params"));
        }
    }

    #[test]
    fn circular_layers_commute_with_shifts() {
        let x = random_tensor([2, 3, 6, 5], 4);
        for mode in LAConvMode::ALL {
            let p = params(3, 2, mode, 5);
            let base = laconv_forward(&x, &p, mode, PadMode::Circular).unwrap();
            for (dy, dx) in [(1, 2), (-3, 1), (5, -4)] {
                let shifted = laconv_forward(&x.roll(dy, dx), &p, mode, PadMode::Circular).unwrap();
                assert!(shifted.max_abs_diff(&base.roll(dy, dx)).unwrap() < 1e-10, "{mode}");
            }
        }
    }

    #[test]
    fn constant_input_gives_constant_output_under_circular_padding() {
        let p = params(2, 3, LAConvMode::FULL, 6);
        let y = laconv_forward(
            &Tensor4::filled([1, 2, 6, 6], 0.4),
            &p,
            LAConvMode::FULL,
            PadMode::Circular,
        )
        .unwrap();
        for co in 0..3 {
            let plane = y.plane(0, co);
            assert!(plane.iter().all(|&v| v == plane[0]));
        }
    }

    #[test]
    fn output_depends_only_on_the_double_halo() {
        // the generator's k-halo stacks on the main kernel's k-halo: 2k−1 = 5
        let mode = LAConvMode::new(ConvKind::LocalAdaptive, BiasKind::Static);
        let p = params(2, 2, mode, 7);
        let x = random_tensor([1, 2, 9, 9], 8);
        let base = laconv_forward(&x, &p, mode, PadMode::Zero).unwrap();
        let (ci, cj) = (4usize, 4usize);
        for i in 0..9usize {
            for j in 0..9usize {
                let mut y = x.clone();
                y.set([0, 1, i, j], x.get([0, 1, i, j]) + 5.0);
                let out = laconv_forward(&y, &p, mode, PadMode::Zero).unwrap();
                let changed = (0..2).any(|co| out.get([0, co, ci, cj]) != base.get([0, co, ci, cj]));
                let inside = i.abs_diff(ci) <= 2 && j.abs_diff(cj) <= 2;
                if !inside {
                    assert!(!changed, "pixel ({i},{j}) leaked into ({ci},{cj})");
                }
            }
        }
    }
}
