use super::config::{FusionSample, ModelConfig};
use crate::error::{Error, Result};
use crate::laconv::{laconv_forward_with, laconv_vjp, ForwardState, LAConvParams};
use crate::ops::{activation, activation_vjp, concat_channels, split_channels, Activation};
use crate::params::ParamSet;
use crate::rng;
use crate::tensor::Tensor4;

/// Parameters of every LAConv layer: head, B residual-block pairs, tail.
#[derive(Debug, Clone, PartialEq)]
pub struct LAResNetParams {
    pub head: LAConvParams,
    pub blocks: Vec<(LAConvParams, LAConvParams)>,
    pub tail: LAConvParams,
}

impl LAResNetParams {
    /// All-zero parameters for `config`.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let (k, c, mode) = (config.kernel, config.channels, config.mode);
        let blocks = (0..config.blocks)
            .map(|_| Ok((LAConvParams::zeros(c, c, k, mode)?, LAConvParams::zeros(c, c, k, mode)?)))
            .collect::<Result<_>>()?;
        Ok(LAResNetParams {
            head: LAConvParams::zeros(config.head_channels(), c, k, mode)?,
            blocks,
            tail: LAConvParams::zeros(c, config.c_lr, k, mode)?,
        })
    }

    /// Layers in forward order with their names.
    pub fn layers(&self) -> Vec<(String, &LAConvParams)> {
        let mut v = vec![("head".to_string(), &self.head)];
        for (i, (a, b)) in self.blocks.iter().enumerate() {
            v.push((format!("block{}.conv1", i + 1), a));
            v.push((format!("block{}.conv2", i + 1), b));
        }
        v.push(("tail".to_string(), &self.tail));
        v
    }

    pub fn layers_mut(&mut self) -> Vec<(String, &mut LAConvParams)> {
        let mut v = vec![("head".to_string(), &mut self.head)];
        for (i, (a, b)) in self.blocks.iter_mut().enumerate() {
            v.push((format!("block{}.conv1", i + 1), a));
            v.push((format!("block{}.conv2", i + 1), b));
        }
        v.push(("tail".to_string(), &mut self.tail));
        v
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }
}

impl ParamSet for LAResNetParams {
    fn visit(&self, f: &mut dyn FnMut(&str, [usize; 4], &[f64])) {
        for (layer, p) in self.layers() {
            p.visit(&mut |name, dims, v| f(&format!("{layer}/{name}"), dims, v));
        }
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [f64])) {
        for (layer, p) in self.layers_mut() {
            p.visit_mut(&mut |name, v| f(&format!("{layer}/{name}"), v));
        }
    }
}

/// He-normal initialisation, zero biases, deterministic in `seed`.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<LAResNetParams> {
    config.validate()?;
    let mut rng = rng::seeded(seed);
    let (k, c, mode) = (config.kernel, config.channels, config.mode);
    let head = LAConvParams::init(config.head_channels(), c, k, mode, &mut rng)?;
    let mut blocks = Vec::with_capacity(config.blocks);
    for _ in 0..config.blocks {
        let a = LAConvParams::init(c, c, k, mode, &mut rng)?;
        let b = LAConvParams::init(c, c, k, mode, &mut rng)?;
        blocks.push((a, b));
    }
    let tail = LAConvParams::init(c, config.c_lr, k, mode, &mut rng)?;
    Ok(LAResNetParams { head, blocks, tail })
}

/// Everything the backward pass needs from a retained forward pass.
#[derive(Debug, Clone)]
pub struct NetworkState {
    c_hr: usize,
    head: ForwardState,
    head_act: Tensor4,
    blocks: Vec<(ForwardState, Tensor4, ForwardState)>,
    tail: ForwardState,
}

impl NetworkState {
    /// Local weight maps of each LAConv layer, in forward order. Empty for
    /// standard-convolution networks.
    pub fn local_weights(&self) -> Vec<&Tensor4> {
        let mut states = vec![&self.head];
        for (a, _, b) in &self.blocks {
            states.push(a);
            states.push(b);
        }
        states.push(&self.tail);
        states.into_iter().filter_map(|s| s.local_weights()).collect()
    }

    /// On/off state of every ReLU unit in the network; two parameter points
    /// with equal patterns lie on the same smooth piece of the loss.
    pub(crate) fn relu_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        let active = |t: &Tensor4, out: &mut Vec<bool>| out.extend(t.data().iter().map(|v| *v > 0.0));
        self.head.push_relu_pattern(&mut out);
        active(&self.head_act, &mut out);
        for (s1, u, s2) in &self.blocks {
            s1.push_relu_pattern(&mut out);
            active(u, &mut out);
            s2.push_relu_pattern(&mut out);
        }
        self.tail.push_relu_pattern(&mut out);
        out
    }
}

#[derive(Debug, Clone)]
pub struct NetworkGrads {
    pub params: LAResNetParams,
    pub lr_up: Tensor4,
    pub hr: Tensor4,
}

fn check_params(params: &LAResNetParams, config: &ModelConfig) -> Result<()> {
    if params.blocks.len() != config.blocks {
        return Err(Error::Shape(format!(
            "parameters hold {} blocks, config says {}",
            params.blocks.len(),
            config.blocks
        )));
    }
    for ((name, c_in, c_out), (_, p)) in config.layer_shapes().into_iter().zip(params.layers()) {
        if p.c_in() != c_in || p.c_out() != c_out || p.k() != config.kernel {
            return Err(Error::Shape(format!(
                "layer {name}: parameters are {}→{} (k={}), config needs {c_in}→{c_out} (k={})",
                p.c_in(),
                p.c_out(),
                p.k(),
                config.kernel
            )));
        }
    }
    Ok(())
}

pub fn forward(params: &LAResNetParams, sample: &FusionSample, config: &ModelConfig) -> Result<Tensor4> {
    Ok(forward_with(params, sample, config, false)?.0)
}

/// SR = lr_up + tail(blocks(relu(head([hr; lr_up])))).
pub fn forward_with(
    params: &LAResNetParams,
    sample: &FusionSample,
    config: &ModelConfig,
    retain: bool,
) -> Result<(Tensor4, NetworkState)> {
    check_params(params, config)?;
    sample.check_against(config)?;
    let (mode, pad) = (config.mode, config.pad);

    let m = concat_channels(&sample.hr, &sample.lr_up)?;
    let (z, head) = laconv_forward_with(&m, &params.head, mode, pad, retain)?;
    let head_act = activation(&z, Activation::Relu);

    let mut x = head_act.clone();
    let mut blocks = Vec::with_capacity(params.blocks.len());
    for (p1, p2) in &params.blocks {
        let (z1, s1) = laconv_forward_with(&x, p1, mode, pad, retain)?;
        let u = activation(&z1, Activation::Relu);
        let (v, s2) = laconv_forward_with(&u, p2, mode, pad, retain)?;
        x.add_assign(&v)?;
        blocks.push((s1, u, s2));
    }
    let (out, tail) = laconv_forward_with(&x, &params.tail, mode, pad, retain)?;
    let sr = sample.lr_up.zip_map(&out, |a, b| a + b)?;
    Ok((
        sr,
        NetworkState {
            c_hr: config.c_hr,
            head,
            head_act,
            blocks,
            tail,
        },
    ))
}

/// Gradients of ⟨cotangent, SR⟩ w.r.t. every parameter and both inputs.
pub fn backward(params: &LAResNetParams, state: &NetworkState, cotangent: &Tensor4) -> Result<NetworkGrads> {
    let mut grads = params.zeros_like();

    let g_tail = laconv_vjp(&params.tail, &state.tail, cotangent)?;
    grads.tail = g_tail.params;
    let mut d_x = g_tail.input;

    for (i, ((p1, p2), (s1, u, s2))) in params.blocks.iter().zip(&state.blocks).enumerate().rev() {
        let g2 = laconv_vjp(p2, s2, &d_x)?;
        let d_z1 = activation_vjp(u, Activation::Relu, &g2.input);
        let g1 = laconv_vjp(p1, s1, &d_z1)?;
        d_x.add_assign(&g1.input)?;
        grads.blocks[i] = (g1.params, g2.params);
    }

    let d_z = activation_vjp(&state.head_act, Activation::Relu, &d_x);
    let g_head = laconv_vjp(&params.head, &state.head, &d_z)?;
    grads.head = g_head.params;
    let (d_hr, d_lr_from_head) = split_channels(&g_head.input, state.c_hr)?;
    let mut d_lr = cotangent.clone();
    d_lr.add_assign(&d_lr_from_head)?;
    Ok(NetworkGrads {
        params: grads,
        lr_up: d_lr,
        hr: d_hr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laconv::LAConvMode;
    use crate::laresnet::loss_mse;
    use crate::tensor::PadMode;
    use crate::testutil::random_tensor;

    fn sample(config: &ModelConfig, n: usize, size: usize, seed: u64) -> FusionSample {
        FusionSample::new(
            random_tensor([n, config.c_lr, size, size], seed),
            random_tensor([n, config.c_hr, size, size], seed + 1),
            Some(random_tensor([n, config.c_lr, size, size], seed + 2)),
        )
        .unwrap()
    }

    #[test]
    fn zero_network_returns_upsampled_lr() {
        let config = ModelConfig {
            mode: LAConvMode::ALL[0],
            ..ModelConfig::toy()
        };
        let p = LAResNetParams::zeros(&config).unwrap();
        let s = sample(&config, 2, 8, 1);
        assert_eq!(forward(&p, &s, &config).unwrap(), s.lr_up);
    }

    #[test]
    fn zero_tail_gives_global_residual_identity() {
        let config = ModelConfig::toy();
        let mut p = init_params(&config, 3).unwrap();
        p.tail.fill(0.0);
        let s = sample(&config, 1, 8, 2);
        assert_eq!(forward(&p, &s, &config).unwrap(), s.lr_up);
    }

    #[test]
    fn output_shape_and_determinism() {
        let config = ModelConfig::toy();
        let p = init_params(&config, 4).unwrap();
        let s = sample(&config, 3, 10, 5);
        let a = forward(&p, &s, &config).unwrap();
        assert_eq!(a.dims(), [3, 4, 10, 10]);
        assert_eq!(a, forward(&p, &s, &config).unwrap());
    }

    #[test]
    fn init_is_seed_deterministic() {
        let config = ModelConfig::toy();
        assert_eq!(init_params(&config, 7).unwrap(), init_params(&config, 7).unwrap());
        assert_ne!(init_params(&config, 7).unwrap(), init_params(&config, 8).unwrap());
    }

    #[test]
    fn init_std_follows_fan_in() {
        let config = ModelConfig::pansharpening();
        let p = init_params(&config, 11).unwrap();
        // block kernels: 32·32·9 draws, fan_in 288
        let v = p.blocks[0].0.main_kernel.weights().data();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        let want = (2.0f64 / 288.0).sqrt();
        assert!((std / want - 1.0).abs() < 0.1, "std {std} vs {want}");
        assert!(p.head.generator.as_ref().unwrap().conv_bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn rejects_mismatched_sample() {
        let config = ModelConfig::toy();
        let p = init_params(&config, 1).unwrap();
        let bad = FusionSample::new(Tensor4::zeros([1, 3, 8, 8]), Tensor4::zeros([1, 1, 8, 8]), None).unwrap();
        assert!(matches!(forward(&p, &bad, &config), Err(Error::Shape(_))));
    }

    #[test]
    fn circular_network_commutes_with_shifts() {
        let config = ModelConfig {
            pad: PadMode::Circular,
            ..ModelConfig::toy()
        };
        let p = init_params(&config, 9).unwrap();
        let s = sample(&config, 1, 8, 10);
        let base = forward(&p, &s, &config).unwrap();
        let shifted = forward(&p, &s.roll(3, -2), &config).unwrap();
        assert!(shifted.max_abs_diff(&base.roll(3, -2)).unwrap() < 1e-8);
    }

    #[test]
    fn gradient_of_random_coordinates_matches_finite_differences() {
        let config = ModelConfig::toy();
        let mut p = init_params(&config, 21).unwrap();
        let mut r = rng::seeded(5);
        p.visit_mut(&mut |name, v| {
            if name.ends_with("bias") {
                rng::fill_normal(v, 0.05, &mut r);
            }
        });
        let s = sample(&config, 2, 8, 22);
        let gt = s.gt.clone().unwrap();
        let (sr, st) = forward_with(&p, &s, &config, true).unwrap();
        let l = loss_mse(&sr, &gt).unwrap();
        let g = backward(&p, &st, &l.cotangent).unwrap().params.flatten();
        let flat = p.flatten();
        let h = 1e-5;
        for idx in (0..flat.len()).step_by(97) {
            let mut q = p.clone();
            let mut f = flat.clone();
            f[idx] += h;
            q.assign_flat(&f);
            let up = loss_mse(&forward(&q, &s, &config).unwrap(), &gt).unwrap().loss;
            f[idx] -= 2.0 * h;
            q.assign_flat(&f);
            let down = loss_mse(&forward(&q, &s, &config).unwrap(), &gt).unwrap().loss;
            let fd = (up - down) / (2.0 * h);
            let diff = (fd - g[idx]).abs();
            assert!(
                diff < 1e-7 || diff / fd.abs().max(g[idx].abs()) < 1e-4,
                "coord {idx}: {fd} vs {}",
                g[idx]
            );
        }
    }
}
