use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use laconv_core::laconv::ConvKind;
use laconv_core::laresnet::{forward_with, FusionSample, ModelConfig};
use laconv_core::tenfile::write_ten;
use laconv_core::{Error, PadMode, Result, Tensor4};

use super::{create_dir, load_dataset, load_model, write_file};
use crate::pgm::{normalise, write_pgm};
use crate::EXIT_OK;

#[derive(Debug, Clone)]
pub enum Input {
    Sample { data: PathBuf, id: String },
    Constant { value: f64, size: usize },
}

/// Average and spread maps of one layer's local weights, each (h, w).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMaps {
    pub layer: String,
    pub h: usize,
    pub w: usize,
    /// Mean over the k² taps at each pixel.
    pub avg: Vec<f64>,
    /// Root mean square over the k² taps of each tap's deviation from its
    /// spatial mean: how far the kernel at this pixel departs from the
    /// image-wide average kernel. Exactly zero for spatially uniform weights.
    pub std: Vec<f64>,
}

/// Maps of the first sample of a (n, k², h, w) weight tensor.
pub fn weight_maps(layer: &str, weights: &Tensor4) -> WeightMaps {
    let [_, taps, h, w] = weights.dims();
    let hw = h * w;
    let mut avg = vec![0.0; hw];
    let mut sq = vec![0.0; hw];
    for q in 0..taps {
        let plane = weights.plane(0, q);
        // mean as offset from the first pixel so equal values cancel exactly
        let anchor = plane[0];
        let mean = anchor + plane.iter().map(|v| v - anchor).sum::<f64>() / hw as f64;
        for p in 0..hw {
            avg[p] += plane[p];
            let d = plane[p] - mean;
            sq[p] += d * d;
        }
    }
    let t = taps as f64;
    WeightMaps {
        layer: layer.to_string(),
        h,
        w,
        avg: avg.into_iter().map(|v| v / t).collect(),
        std: sq.into_iter().map(|v| (v / t).sqrt()).collect(),
    }
}

fn min_max_mean(v: &[f64]) -> (f64, f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi, v.iter().sum::<f64>() / v.len() as f64)
}

fn input_sample(input: &Input, config: &ModelConfig) -> Result<FusionSample> {
    match input {
        Input::Sample { data, id } => {
            let ds = load_dataset(data)?;
            let entry = ds
                .entries
                .iter()
                .find(|e| &e.id == id)
                .ok_or_else(|| Error::Config(format!("no sample `{id}` in {}", data.display())))?;
            ds.sample(entry)
        }
        Input::Constant { value, size } => {
            if *size == 0 {
                return Err(Error::Config("--size must be positive".into()));
            }
            FusionSample::new(
                Tensor4::filled([1, config.c_lr, *size, *size], *value),
                Tensor4::filled([1, config.c_hr, *size, *size], *value),
                None,
            )
        }
    }
}

/// Runs one forward pass and returns the maps of every layer in forward order.
pub fn inspect(
    config: &ModelConfig,
    params: &laconv_core::laresnet::LAResNetParams,
    sample: &FusionSample,
) -> Result<Vec<WeightMaps>> {
    if config.mode.conv != ConvKind::LocalAdaptive {
        return Err(Error::Config(format!(
            "checkpoint uses {} convolution; weight maps need local adaptive layers",
            config.mode
        )));
    }
    let (_, state) = forward_with(params, sample, config, true)?;
    let names = config.layer_shapes();
    Ok(names
        .iter()
        .zip(state.local_weights())
        .map(|((name, _, _), w)| weight_maps(name, w))
        .collect())
}

pub fn run(checkpoint: &Path, out: &Path, input: &Input, pad: Option<PadMode>) -> Result<i32> {
    let (mut config, params) = load_model(checkpoint)?;
    if let Some(p) = pad {
        config.pad = p;
    }
    let sample = input_sample(input, &config)?;
    let maps = inspect(&config, &params, &sample)?;
    create_dir(out)?;
    let mut csv = String::from("layer,name,avg_min,avg_max,avg_mean,std_min,std_max,std_mean\n");
    for (i, m) in maps.iter().enumerate() {
        for (kind, values) in [("avg", &m.avg), ("std", &m.std)] {
            let stem = format!("{i:02}_{}_{kind}", m.layer);
            write_pgm(&out.join(format!("{stem}.pgm")), m.h, m.w, &normalise(values))?;
            write_ten(
                &out.join(format!("{stem}.ten")),
                &Tensor4::from_vec([1, 1, m.h, m.w], values.clone())?,
            )?;
        }
        let (a0, a1, am) = min_max_mean(&m.avg);
        let (s0, s1, sm) = min_max_mean(&m.std);
        let _ = writeln!(csv, "{i},{},{a0},{a1},{am},{s0},{s1},{sm}", m.layer);
    }
    write_file(&out.join("weight_maps.csv"), &csv)?;
    println!("wrote {} avg/std map pairs to {}", maps.len(), out.display());
    Ok(EXIT_OK)
}
