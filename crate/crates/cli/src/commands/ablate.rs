use std::fmt::Write as _;
use std::path::Path;

use laconv_core::datasim::{Dataset, Split};
use laconv_core::laconv::LAConvMode;
use laconv_core::laresnet::{count_params, init_params, ModelConfig};
use laconv_core::optim::{train, TrainSets};
use laconv_core::{Error, Result};

use super::eval::{score, Baseline};
use super::{create_dir, load_dataset, write_file};
use crate::config::RunConfig;
use crate::{EXIT_INVALID, EXIT_OK};

pub const COLUMNS: [&str; 4] = ["SAM", "ERGAS", "SCC", "Q2n"];

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub mode: LAConvMode,
    pub params: usize,
    /// Test-split means in [`COLUMNS`] order; `None` when the run failed.
    pub scores: Option<[f64; 4]>,
    pub status: String,
}

fn slug(mode: LAConvMode) -> String {
    mode.label().to_ascii_lowercase().replace('+', "_")
}

fn train_and_score(
    cfg: &RunConfig,
    model: &ModelConfig,
    ds: &Dataset,
    sets: &TrainSets,
    out: &Path,
) -> Result<[f64; 4]> {
    let init = init_params(model, cfg.seed())?;
    let outcome = train(model, &cfg.train, sets, init, out)?;
    let metric = cfg.metric;
    let report = score(ds, Split::Test, Some((model, &outcome.params)), Baseline::Lrup, &metric)?;
    let mut v = [0.0; 4];
    for (slot, name) in v.iter_mut().zip(COLUMNS) {
        *slot = report.summary(name).expect("column is scored").mean;
    }
    Ok(v)
}

/// Trains every mode with the same seed and data, scoring each on the test
/// split. A failing mode is recorded and the remaining modes still run.
pub fn ablate(cfg: &RunConfig, data: &Path, out: &Path, modes: &[LAConvMode]) -> Result<Vec<AblationRow>> {
    let ds = load_dataset(data)?;
    let sets = TrainSets {
        train: ds.samples(Split::Train)?,
        val: ds.samples(Split::Val)?,
    };
    if sets.train.is_empty() || ds.split(Split::Test).is_empty() {
        return Err(Error::Config("ablation needs non-empty train and test splits".into()));
    }
    create_dir(out)?;
    let mut rows = Vec::with_capacity(modes.len());
    for &mode in modes {
        let model = ModelConfig { mode, ..cfg.model };
        let params = count_params(&model).total;
        log::info!("ablation: training {mode} ({params} parameters)");
        let (scores, status) = match train_and_score(cfg, &model, &ds, &sets, &out.join(slug(mode))) {
            Ok(s) => (Some(s), "ok".to_string()),
            Err(e) => {
                log::warn!("ablation: {mode} failed: {e}");
                (None, format!("failed: {}", e.to_string().replace(',', ";")))
            }
        };
        rows.push(AblationRow {
            mode,
            params,
            scores,
            status,
        });
    }
    Ok(rows)
}

pub fn to_csv(rows: &[AblationRow]) -> String {
    let mut s = format!("mode,params,{},status\n", COLUMNS.join(","));
    for r in rows {
        let _ = write!(s, "{},{}", r.mode, r.params);
        match r.scores {
            Some(v) => v.iter().for_each(|x| {
                let _ = write!(s, ",{x}");
            }),
            None => s += &",".repeat(COLUMNS.len()),
        }
        let _ = writeln!(s, ",{}", r.status);
    }
    s
}

pub fn run(cfg: &RunConfig, data: &Path, out: &Path, modes: &[LAConvMode]) -> Result<i32> {
    let modes = if modes.is_empty() { &LAConvMode::ALL[..] } else { modes };
    let rows = ablate(cfg, data, out, modes)?;
    let csv = to_csv(&rows);
    let path = out.join("ablation.csv");
    write_file(&path, &csv)?;
    println!(
        "{:<8} {:>8} {:>9} {:>9} {:>7} {:>7}  status",
        "mode", "params", "SAM", "ERGAS", "SCC", "Q2n"
    );
    for r in &rows {
        match r.scores {
            Some([a, b, c, d]) => println!(
                "{:<8} {:>8} {a:>9.4} {b:>9.4} {c:>7.4} {d:>7.4}  {}",
                r.mode.label(),
                r.params,
                r.status
            ),
            None => println!("{:<8} {:>8} {:>35}  {}", r.mode.label(), r.params, "", r.status),
        }
    }
    println!("wrote {}", path.display());
    Ok(if rows.iter().all(|r| r.scores.is_some()) {
        EXIT_OK
    } else {
        EXIT_INVALID
    })
}
