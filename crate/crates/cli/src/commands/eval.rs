use std::path::{Path, PathBuf};

use clap::ValueEnum;
use laconv_core::datasim::{Dataset, Split};
use laconv_core::laresnet::{forward, LAResNetParams, ModelConfig};
use laconv_core::metrics::{ergas, psnr, q2n, qnr_suite, sam, scc, ssim, MetricConfig, MetricReport};
use laconv_core::{Error, Result, Tensor4};

use super::{create_dir, load_dataset, load_model};
use crate::config::RunConfig;
use crate::EXIT_OK;

/// Reference outputs scored without a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    /// The ground truth itself; every metric at its ideal value.
    Gt,
    /// The interpolated low-resolution input.
    Lrup,
}

#[derive(Debug, Clone)]
pub enum Source {
    Checkpoint(PathBuf),
    Baseline(Baseline),
}

pub const REDUCED_METRICS: [&str; 6] = ["SAM", "ERGAS", "SCC", "Q2n", "PSNR", "SSIM"];
pub const QNR_METRICS: [&str; 3] = ["QNR", "D_lambda", "D_s"];

/// Per-sample metrics of `model` (or a baseline) over one split.
///
/// Reference metrics compare against the ground truth. QNR, Dλ and Ds treat
/// the stored LR and HR images as the no-reference inputs and are reported
/// only when the HR guide has a single band.
pub fn score(
    ds: &Dataset,
    split: Split,
    model: Option<(&ModelConfig, &LAResNetParams)>,
    baseline: Baseline,
    metric: &MetricConfig,
) -> Result<MetricReport> {
    let entries = ds.split(split);
    if entries.is_empty() {
        return Err(Error::Config(format!(
            "split `{split}` of {} is empty",
            ds.root.display()
        )));
    }
    let first = ds.sample(entries[0])?;
    let with_qnr = first.hr.c() == 1;
    let mut names: Vec<&str> = REDUCED_METRICS.to_vec();
    if with_qnr {
        names.extend(QNR_METRICS);
    } else {
        log::info!("HR guide has {} bands; skipping QNR", first.hr.c());
    }
    let mut report = MetricReport::new(&names);
    for entry in entries {
        let sample = ds.sample(entry)?;
        let gt = sample.gt.as_ref().expect("dataset samples carry ground truth");
        let sr: Tensor4 = match model {
            Some((config, params)) => forward(params, &sample, config)?,
            None => match baseline {
                Baseline::Gt => gt.clone(),
                Baseline::Lrup => sample.lr_up.clone(),
            },
        };
        let mut values = vec![
            sam(&sr, gt)?,
            ergas(&sr, gt, metric.ratio)?,
            scc(&sr, gt)?,
            q2n(&sr, gt, metric)?,
            psnr(&sr, gt, metric)?,
            ssim(&sr, gt, metric)?,
        ];
        if with_qnr {
            let lr = ds.read(&entry.lr)?;
            let s = qnr_suite(&sr, &lr, &sample.hr, metric)?;
            values.extend([s.qnr, s.d_lambda, s.d_s]);
        }
        report.push(entry.id.clone(), values)?;
    }
    Ok(report)
}

pub fn run(cfg: &RunConfig, source: &Source, data: &Path, out: &Path, split: Split) -> Result<i32> {
    let ds = load_dataset(data)?;
    let loaded = match source {
        Source::Checkpoint(dir) => Some(load_model(dir)?),
        Source::Baseline(_) => None,
    };
    let metric = match &loaded {
        Some((config, _)) => MetricConfig {
            ratio: config.upsample_factor,
            ..cfg.metric
        },
        None => cfg.metric,
    };
    let baseline = match source {
        Source::Baseline(b) => *b,
        Source::Checkpoint(_) => Baseline::Lrup,
    };
    let report = score(&ds, split, loaded.as_ref().map(|(c, p)| (c, p)), baseline, &metric)?;
    create_dir(out)?;
    let csv = out.join("metrics.csv");
    report.write_csv(&csv)?;
    print!("{}", report.summary_table());
    println!("wrote {}", csv.display());
    Ok(EXIT_OK)
}
