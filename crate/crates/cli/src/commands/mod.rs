//! One module per subcommand. Each returns the process exit code on
//! completion; errors propagate to [`crate::run`].

pub mod ablate;
pub mod eval;
pub mod gen_data;
pub mod gradcheck;
pub mod inspect;
pub mod params;
pub mod train;

use std::path::{Path, PathBuf};

use laconv_core::datasim::Dataset;
use laconv_core::laresnet::checkpoint::load_checkpoint;
use laconv_core::laresnet::{LAResNetParams, ModelConfig};
use laconv_core::{Error, Result};

use crate::config::RunConfig;
use crate::Cmd;

pub fn dispatch(cmd: &Cmd, cfg: &RunConfig) -> Result<i32> {
    let p = &cfg.paths;
    match cmd {
        Cmd::GenData { out } => gen_data::run(cfg, &pick(out, &p.out_dir, "--out")?),
        Cmd::Train { data, out, checkpoint } => train::run(
            cfg,
            &pick(data, &p.data_dir, "--data")?,
            &pick(out, &p.out_dir, "--out")?,
            checkpoint.as_deref().or(p.checkpoint.as_deref()),
        ),
        Cmd::Eval {
            checkpoint,
            baseline,
            data,
            out,
            split,
        } => {
            let source = match (baseline, checkpoint.as_ref().or(p.checkpoint.as_ref())) {
                (Some(b), _) => eval::Source::Baseline(*b),
                (None, Some(c)) => eval::Source::Checkpoint(c.clone()),
                (None, None) => return Err(Error::Config("eval needs --checkpoint or --baseline".into())),
            };
            eval::run(
                cfg,
                &source,
                &pick(data, &p.data_dir, "--data")?,
                &pick(out, &p.out_dir, "--out")?,
                *split,
            )
        }
        Cmd::Gradcheck { h, tol, out } => gradcheck::run(cfg, *h, *tol, out.as_deref()),
        Cmd::Ablate { data, out, modes } => ablate::run(
            cfg,
            &pick(data, &p.data_dir, "--data")?,
            &pick(out, &p.out_dir, "--out")?,
            modes,
        ),
        Cmd::Params => params::run(cfg),
        Cmd::Inspect {
            checkpoint,
            out,
            data,
            sample,
            constant,
            size,
            pad,
        } => {
            let input = match (data, sample, constant, size) {
                (Some(d), Some(s), None, _) => inspect::Input::Sample {
                    data: d.clone(),
                    id: s.clone(),
                },
                (None, _, Some(v), Some(n)) => inspect::Input::Constant { value: *v, size: *n },
                _ => {
                    return Err(Error::Config(
                        "inspect needs either --data and --sample, or --constant and --size".into(),
                    ))
                }
            };
            inspect::run(
                &pick(checkpoint, &p.checkpoint, "--checkpoint")?,
                &pick(out, &p.out_dir, "--out")?,
                &input,
                *pad,
            )
        }
    }
}

/// Command-line flag first, then the config file's path key.
fn pick(flag: &Option<PathBuf>, from_config: &Option<PathBuf>, name: &str) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| from_config.clone())
        .ok_or_else(|| Error::Config(format!("{name} is required (flag or config key)")))
}

pub(crate) fn load_model(dir: &Path) -> Result<(ModelConfig, LAResNetParams)> {
    let (config, params) = load_checkpoint(dir)?;
    log::info!("loaded {} checkpoint from {}", config.mode, dir.display());
    Ok((config, params))
}

pub(crate) fn load_dataset(dir: &Path) -> Result<Dataset> {
    let ds = Dataset::load(dir)?;
    if ds.entries.is_empty() {
        return Err(Error::Config(format!("dataset {} has no samples", dir.display())));
    }
    Ok(ds)
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}
