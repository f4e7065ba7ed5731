use crate::error::{Error, Result};
use crate::params::ParamSet;

/// Adam moments over the flat parameter layout of a [`ParamSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        AdamState {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }
}

/// One bias-corrected Adam update. Non-finite gradients abort the step and
/// leave both `params` and `state` untouched.
pub fn adam_step<P: ParamSet>(params: &mut P, grads: &P, state: &mut AdamState, lr: f64) -> Result<()> {
    let n = params.num_params();
    if grads.num_params() != n || state.m.len() != n {
        return Err(Error::Shape(format!(
            "adam: {n} parameters, {} gradients, state for {}",
            grads.num_params(),
            state.m.len()
        )));
    }
    let mut bad = None;
    grads.visit(&mut |name, _, g| {
        if bad.is_none() {
            if let Some(i) = g.iter().position(|x| !x.is_finite()) {
                bad = Some(format!("non-finite gradient {} in group `{name}` at index {i}", g[i]));
            }
        }
    });
    if let Some(msg) = bad {
        return Err(Error::Numeric(format!("adam step {} aborted: {msg}", state.t + 1)));
    }

    let g = grads.flatten();
    state.t += 1;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for i in 0..n {
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g[i];
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g[i] * g[i];
    }
    let (m, v, eps) = (&state.m, &state.v, state.eps);
    let mut offset = 0;
    params.visit_mut(&mut |_, theta| {
        for (j, p) in theta.iter_mut().enumerate() {
            let i = offset + j;
            *p -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
        }
        offset += theta.len();
    });
    Ok(())
}
