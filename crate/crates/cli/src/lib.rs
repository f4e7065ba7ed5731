//! `laconv` command-line tool: synthetic data, training, evaluation,
//! gradient audit, mode ablation, parameter counts and weight-map inspection.
//!
//! Exit codes: 0 success, 1 invalid input or a failed check, 2 I/O or file
//! format error.

pub mod commands;
pub mod config;
pub mod pgm;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgAction, CommandFactory, FromArgMatches, Parser, Subcommand};
use laconv_core::datasim::Split;
use laconv_core::optim::TaskPreset;
use laconv_core::{Error, PadMode, Result};

use crate::config::{key_reference, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "laconv", version, about = "Local adaptive convolution fusion networks")]
pub struct Cli {
    /// Run configuration file (key = value lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Preset applied before the config file.
    #[arg(long, global = true)]
    pub preset: Option<TaskPreset>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Generate a simulated dataset.
    GenData {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a network on the train split.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Start from this checkpoint instead of a fresh initialisation.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Score a checkpoint or a baseline on one split; writes metrics.csv.
    Eval {
        #[arg(long, conflicts_with = "baseline")]
        checkpoint: Option<PathBuf>,
        /// Score a reference output instead of a network.
        #[arg(long)]
        baseline: Option<commands::eval::Baseline>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "test")]
        split: Split,
    },
    /// Compare analytic and finite-difference gradients.
    Gradcheck {
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Also write the table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate each convolution/bias mode; writes ablation.csv.
    Ablate {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated mode labels (default: all six).
        #[arg(long, value_delimiter = ',')]
        modes: Vec<laconv_core::laconv::LAConvMode>,
    },
    /// Print per-layer and total parameter counts.
    Params,
    /// Write per-layer local weight maps of a checkpoint.
    Inspect {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dataset providing the input sample.
        #[arg(long, requires = "sample")]
        data: Option<PathBuf>,
        /// Sample id within --data.
        #[arg(long)]
        sample: Option<String>,
        /// Feed a constant image of this value instead of a sample.
        #[arg(long, conflicts_with = "data", requires = "size")]
        constant: Option<f64>,
        /// Side of the constant image.
        #[arg(long)]
        size: Option<usize>,
        /// Padding override for the inspected forward pass.
        #[arg(long)]
        pad: Option<PadMode>,
    },
}

impl Cli {
    /// Builds the run configuration: preset, file, `--set`, `--seed`.
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, self.preset) {
            (Some(path), preset) => {
                let text = fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                let text = match preset {
                    Some(p) => format!("preset = {p}\n{text}"),
                    None => text,
                };
                RunConfig::from_text(&text, path).map(|c| rebase_paths(c, path))?
            }
            (None, preset) => RunConfig::preset(preset.unwrap_or(TaskPreset::Toy)),
        };
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn rebase_paths(mut cfg: RunConfig, file: &Path) -> RunConfig {
    let base = file.parent().unwrap_or(Path::new(""));
    for p in [
        &mut cfg.paths.data_dir,
        &mut cfg.paths.out_dir,
        &mut cfg.paths.checkpoint,
        &mut cfg.data.srf_file,
    ]
    .into_iter()
    .flatten()
    {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    cfg
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_io() {
        EXIT_IO
    } else {
        EXIT_INVALID
    }
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Output goes to stdout, diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let command = Cli::command().after_long_help(format!(
        "{}\nExit codes: 0 success, 1 invalid input or failed check, 2 I/O or format error.",
        key_reference()
    ));
    let cli = match command
        .try_get_matches_from(args)
        .and_then(|m| Cli::from_arg_matches(&m))
    {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();

    let result = cli.run_config().and_then(|cfg| commands::dispatch(&cli.command, &cfg));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
