//! Finite-difference audit of the analytic network gradient.
//!
//! The objective is the MSE training loss. For each parameter group (and for
//! the network input) a random subset of coordinates is perturbed by ±h and
//! the central difference compared against the analytic gradient. A
//! coordinate passes when `|a − n| / max(|a|, |n|)` is below the tolerance
//! or `|a − n|` is below an absolute floor (both sides vanish, e.g. behind an
//! inactive ReLU).
//!
//! The loss is only piecewise smooth. A coordinate whose ±h probe flips any
//! ReLU unit straddles a kink where central differences say nothing about the
//! derivative; such coordinates are counted as `kinked` and replaced by further
//! random draws until `coords_per_group` smooth ones have been compared.

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::error::{Error, Result};
use crate::laresnet::{backward, forward_with, init_params, loss_mse, FusionSample, LAResNetParams};
use crate::laresnet::{ModelConfig, NetworkGrads, NetworkState};
use crate::params::ParamSet;
use crate::rng::{self, SeededRng};
use crate::tensor::Tensor4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckSpec {
    pub seed: u64,
    pub h: f64,
    pub tol: f64,
    pub abs_floor: f64,
    pub coords_per_group: usize,
    pub batch: usize,
    pub size: usize,
}

impl Default for GradcheckSpec {
    fn default() -> Self {
        GradcheckSpec {
            seed: 0,
            h: 1e-5,
            tol: 1e-4,
            abs_floor: 1e-7,
            coords_per_group: 16,
            batch: 2,
            size: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupCheck {
    pub name: String,
    pub checked: usize,
    pub kinked: usize,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckReport {
    pub rows: Vec<GroupCheck>,
    pub tol: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn worst(&self) -> f64 {
        self.rows.iter().map(|r| r.max_rel_err).fold(0.0, f64::max)
    }

    pub fn to_table(&self) -> String {
        let mut s = format!(
            "{:<36} {:>7} {:>7} {:>12} {:>12}  status\n",
            "group", "coords", "kinked", "max_rel", "max_abs"
        );
        for r in &self.rows {
            s += &format!(
                "{:<36} {:>7} {:>7} {:>12.3e} {:>12.3e}  {}\n",
                r.name,
                r.checked,
                r.kinked,
                r.max_rel_err,
                r.max_abs_err,
                if r.pass { "pass" } else { "FAIL" }
            );
        }
        s
    }
}

/// The signature of [`backward`], so tests can audit a deliberately broken VJP.
pub type VjpFn<'a> = dyn Fn(&LAResNetParams, &NetworkState, &Tensor4) -> Result<NetworkGrads> + 'a;

/// Builds seeded parameters and a random uniform [0,1] sample, then audits.
///
/// Biases start at zero, which puts every ReLU fed by an all-zero patch
/// exactly on its kink; the audited point therefore uses biases drawn from
/// U(−0.1, 0.1) instead.
pub fn gradcheck(config: &ModelConfig, spec: &GradcheckSpec) -> Result<GradcheckReport> {
    gradcheck_with_vjp(config, spec, &backward)
}

pub fn gradcheck_with_vjp(config: &ModelConfig, spec: &GradcheckSpec, vjp: &VjpFn<'_>) -> Result<GradcheckReport> {
    config.validate()?;
    if !(spec.h > 0.0 && spec.tol > 0.0) || spec.coords_per_group == 0 || spec.batch == 0 || spec.size == 0 {
        return Err(Error::Config(format!("invalid gradcheck settings {spec:?}")));
    }
    let mut params = init_params(config, spec.seed)?;
    let mut data_rng = rng::derived(spec.seed, 1);
    params.visit_mut(&mut |name, v| {
        if name.ends_with("bias") {
            v.iter_mut().for_each(|b| *b = data_rng.random_range(-0.1..0.1));
        }
    });
    let dims = |c| [spec.batch, c, spec.size, spec.size];
    let sample = FusionSample::new(
        rng::uniform_tensor(dims(config.c_lr), 0.0, 1.0, &mut data_rng),
        rng::uniform_tensor(dims(config.c_hr), 0.0, 1.0, &mut data_rng),
        Some(rng::uniform_tensor(dims(config.c_lr), 0.0, 1.0, &mut data_rng)),
    )?;
    audit(config, spec, &params, &sample, vjp)
}

/// Loss and ReLU pattern at one point.
fn probe(params: &LAResNetParams, sample: &FusionSample, config: &ModelConfig) -> Result<(f64, Vec<bool>)> {
    let gt = sample.gt.as_ref().expect("audit samples carry gt");
    let (sr, state) = forward_with(params, sample, config, true)?;
    Ok((loss_mse(&sr, gt)?.loss, state.relu_pattern()))
}

fn perturb(params: &mut LAResNetParams, group: usize, index: usize, delta: f64) {
    let mut g = 0;
    params.visit_mut(&mut |_, v| {
        if g == group {
            v[index] += delta;
        }
        g += 1;
    });
}

struct Tally {
    row: GroupCheck,
    spec: GradcheckSpec,
}

impl Tally {
    fn new(name: String, spec: GradcheckSpec) -> Self {
        Tally {
            row: GroupCheck {
                name,
                checked: 0,
                kinked: 0,
                max_rel_err: 0.0,
                max_abs_err: 0.0,
                pass: true,
            },
            spec,
        }
    }

    fn done(&self) -> bool {
        self.row.checked >= self.spec.coords_per_group
    }

    fn finish(mut self) -> GroupCheck {
        // a group where nothing could be compared has not been verified
        if self.row.checked == 0 {
            self.row.pass = false;
        }
        self.row
    }

    /// Compares one coordinate given the two probes and the base pattern.
    fn probe_pair(&mut self, analytic: f64, base: &[bool], plus: (f64, Vec<bool>), minus: (f64, Vec<bool>)) {
        if plus.1 != base || minus.1 != base {
            self.row.kinked += 1;
        } else {
            self.record(analytic, (plus.0 - minus.0) / (2.0 * self.spec.h));
        }
    }

    fn record(&mut self, analytic: f64, numeric: f64) {
        let abs = (analytic - numeric).abs();
        let scale = analytic.abs().max(numeric.abs());
        let rel = if scale == 0.0 { 0.0 } else { abs / scale };
        self.row.checked += 1;
        self.row.max_abs_err = self.row.max_abs_err.max(abs);
        self.row.max_rel_err = if rel.is_nan() {
            f64::NAN
        } else {
            self.row.max_rel_err.max(rel)
        };
        // NaN must fail, so test for agreement rather than disagreement
        if !(rel < self.spec.tol || abs <= self.spec.abs_floor) {
            self.row.pass = false;
        }
    }
}

/// A random visiting order over `0..len`.
fn order(len: usize, rng: &mut SeededRng) -> Vec<usize> {
    sample_indices(rng, len, len).into_vec()
}

fn audit(
    config: &ModelConfig,
    spec: &GradcheckSpec,
    params: &LAResNetParams,
    sample: &FusionSample,
    vjp: &VjpFn<'_>,
) -> Result<GradcheckReport> {
    let (sr, state) = forward_with(params, sample, config, true)?;
    let loss = loss_mse(&sr, sample.gt.as_ref().expect("audit samples carry gt"))?;
    let base = state.relu_pattern();
    let grads = vjp(params, &state, &loss.cotangent)?;
    let analytic: Vec<Vec<f64>> = {
        let mut v = Vec::new();
        grads.params.visit(&mut |_, _, g| v.push(g.to_vec()));
        v
    };
    let mut pick_rng = rng::derived(spec.seed, 2);
    let h = spec.h;
    let mut rows = Vec::new();

    let mut work = params.clone();
    for (g, name) in params.group_names().into_iter().enumerate() {
        let mut tally = Tally::new(name, *spec);
        for i in order(analytic[g].len(), &mut pick_rng) {
            if tally.done() {
                break;
            }
            perturb(&mut work, g, i, h);
            let plus = probe(&work, sample, config)?;
            perturb(&mut work, g, i, -2.0 * h);
            let minus = probe(&work, sample, config)?;
            perturb(&mut work, g, i, h);
            tally.probe_pair(analytic[g][i], &base, plus, minus);
        }
        work = params.clone();
        rows.push(tally.finish());
    }

    // both network inputs form one "input" row, each contributing its share
    let mut tally = Tally::new("input".into(), *spec);
    for (which, grad) in [(0, &grads.lr_up), (1, &grads.hr)] {
        let target = tally.row.checked + spec.coords_per_group.div_ceil(2);
        for i in order(grad.len(), &mut pick_rng) {
            if tally.row.checked >= target {
                break;
            }
            let at = |delta: f64| {
                let mut s = sample.clone();
                let t = if which == 0 { &mut s.lr_up } else { &mut s.hr };
                t.data_mut()[i] += delta;
                probe(params, &s, config)
            };
            tally.probe_pair(grad.data()[i], &base, at(h)?, at(-h)?);
        }
    }
    rows.push(tally.finish());
    Ok(GradcheckReport { rows, tol: spec.tol })
}
