//! Run configuration: plain `key = value` lines, `#` comments.
//!
//! `preset` is applied first wherever it appears, then every other key
//! overrides the preset value. Unknown or repeated keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use laconv_core::datasim::{default_srf, read_srf, DatasetSpec, DegradeSpec, SceneSpec, SplitFractions};
use laconv_core::laresnet::ModelConfig;
use laconv_core::metrics::MetricConfig;
use laconv_core::optim::{GradcheckSpec, TaskPreset, TrainConfig};
use laconv_core::{Error, Result};

/// Every accepted key with a one-line description, in `--help` order.
pub const KEYS: &[(&str, &str)] = &[
    ("preset", "pansharpening | hisr | toy; sets every default below"),
    ("blocks", "number of residual blocks B"),
    ("channels", "feature channels C"),
    ("kernel", "LAConv kernel size k (odd)"),
    ("c_lr", "bands of the low-resolution image"),
    ("c_hr", "bands of the high-resolution image"),
    ("mode", "SC+NB | SC+CB | SC+DYB | LAC+NB | LAC+CB | LAC+DYB"),
    ("ratio", "resolution ratio between HR and LR"),
    ("pad", "zero | circular"),
    ("epochs", "training epochs"),
    ("batch_size", "samples per Adam step"),
    ("lr_phase1", "learning rate before phase_split"),
    ("lr_phase2", "learning rate from phase_split on"),
    ("phase_split", "first epoch of the second phase"),
    ("seed", "master seed (init, shuffling, data)"),
    ("q2n_block", "Q2n / UIQI block side"),
    ("qnr_alpha", "QNR exponent on 1 - D_lambda"),
    ("qnr_beta", "QNR exponent on 1 - D_s"),
    ("ssim_window", "SSIM Gaussian window side"),
    ("ssim_sigma", "SSIM Gaussian sigma"),
    ("ssim_k1", "SSIM K1"),
    ("ssim_k2", "SSIM K2"),
    ("peak", "PSNR / SSIM dynamic range"),
    ("psnr_cap", "PSNR reported for identical images"),
    ("data_count", "samples generated by gen-data"),
    ("data_size", "side of generated ground truth"),
    ("data_shapes", "hard-edged shapes per scene"),
    ("data_smoothness", "background low-pass sigma in pixels"),
    ("train_fraction", "fraction of samples in the train split"),
    ("val_fraction", "fraction of samples in the validation split"),
    ("blur_kernel", "Gaussian blur size for degradation"),
    ("blur_sigma", "Gaussian blur sigma for degradation"),
    ("srf_file", "spectral response matrix file (default: built in)"),
    ("gradcheck_batch", "samples in the gradient-audit input"),
    ("gradcheck_size", "side of the gradient-audit input"),
    ("gradcheck_coords", "coordinates checked per parameter group"),
    ("gradcheck_h", "finite-difference step"),
    ("gradcheck_tol", "relative error tolerance"),
    ("gradcheck_abs_floor", "absolute error always accepted"),
    ("data_dir", "dataset directory"),
    ("out_dir", "output directory"),
    ("checkpoint", "checkpoint directory"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct DataSettings {
    pub count: usize,
    pub size: usize,
    pub n_shapes: usize,
    pub smoothness: f64,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub blur_kernel: usize,
    pub blur_sigma: f64,
    pub srf_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Paths {
    pub data_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: TaskPreset,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub metric: MetricConfig,
    pub data: DataSettings,
    pub gradcheck: GradcheckSpec,
    pub paths: Paths,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

impl RunConfig {
    pub fn preset(preset: TaskPreset) -> Self {
        let (model, data) = match preset {
            TaskPreset::Pansharpening => (
                ModelConfig::pansharpening(),
                DataSettings {
                    count: 100,
                    size: 64,
                    n_shapes: 3,
                    val_fraction: 0.1,
                    ..DataSettings::toy()
                },
            ),
            TaskPreset::Hisr => (
                ModelConfig::hisr(),
                DataSettings {
                    count: 100,
                    size: 64,
                    n_shapes: 3,
                    val_fraction: 0.1,
                    ..DataSettings::toy()
                },
            ),
            TaskPreset::Toy => (ModelConfig::toy(), DataSettings::toy()),
        };
        RunConfig {
            preset,
            metric: MetricConfig {
                ratio: model.upsample_factor,
                ..MetricConfig::default()
            },
            model,
            train: TrainConfig::for_preset(preset),
            data,
            gradcheck: GradcheckSpec::default(),
            paths: Paths::default(),
        }
    }

    /// Parses config text; `origin` names the source in error messages.
    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut order = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected `key = value`, got `{line}`",
                    origin.display(),
                    i + 1
                ))
            })?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if !KEYS.iter().any(|(name, _)| *name == k) {
                return Err(Error::Config(format!(
                    "{}:{}: unknown key `{k}`",
                    origin.display(),
                    i + 1
                )));
            }
            if entries.insert(k.clone(), v).is_some() {
                return Err(Error::Config(format!(
                    "{}:{}: key `{k}` given twice",
                    origin.display(),
                    i + 1
                )));
            }
            order.push(k);
        }
        let preset = match entries.get("preset") {
            Some(p) => p.parse()?,
            None => TaskPreset::Toy,
        };
        let mut cfg = RunConfig::preset(preset);
        for k in order.iter().filter(|k| *k != "preset") {
            cfg.set(k, &entries[k])?;
        }
        Ok(cfg)
    }

    /// Sets one key. `ratio` drives both the model and the metrics.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value;
        match key {
            "preset" => return Err(Error::Config("`preset` can only be given in a config file".into())),
            "blocks" => self.model.blocks = parse(key, v)?,
            "channels" => self.model.channels = parse(key, v)?,
            "kernel" => self.model.kernel = parse(key, v)?,
            "c_lr" => self.model.c_lr = parse(key, v)?,
            "c_hr" => self.model.c_hr = parse(key, v)?,
            "mode" => self.model.mode = v.parse()?,
            "ratio" => {
                self.model.upsample_factor = parse(key, v)?;
                self.metric.ratio = self.model.upsample_factor;
            }
            "pad" => self.model.pad = v.parse()?,
            "epochs" => self.train.epochs = parse(key, v)?,
            "batch_size" => self.train.batch_size = parse(key, v)?,
            "lr_phase1" => self.train.lr_phase1 = parse(key, v)?,
            "lr_phase2" => self.train.lr_phase2 = parse(key, v)?,
            "phase_split" => self.train.phase_split = parse(key, v)?,
            "seed" => self.set_seed(parse(key, v)?),
            "q2n_block" => self.metric.q2n_block = parse(key, v)?,
            "qnr_alpha" => self.metric.qnr_alpha = parse(key, v)?,
            "qnr_beta" => self.metric.qnr_beta = parse(key, v)?,
            "ssim_window" => self.metric.ssim_window = parse(key, v)?,
            "ssim_sigma" => self.metric.ssim_sigma = parse(key, v)?,
            "ssim_k1" => self.metric.ssim_k1 = parse(key, v)?,
            "ssim_k2" => self.metric.ssim_k2 = parse(key, v)?,
            "peak" => self.metric.peak = parse(key, v)?,
            "psnr_cap" => self.metric.psnr_cap = parse(key, v)?,
            "data_count" => self.data.count = parse(key, v)?,
            "data_size" => self.data.size = parse(key, v)?,
            "data_shapes" => self.data.n_shapes = parse(key, v)?,
            "data_smoothness" => self.data.smoothness = parse(key, v)?,
            "train_fraction" => self.data.train_fraction = parse(key, v)?,
            "val_fraction" => self.data.val_fraction = parse(key, v)?,
            "blur_kernel" => {
                self.data.blur_kernel = parse(key, v)?;
                self.metric.qnr_blur_kernel = self.data.blur_kernel;
            }
            "blur_sigma" => {
                self.data.blur_sigma = parse(key, v)?;
                self.metric.qnr_blur_sigma = self.data.blur_sigma;
            }
            "srf_file" => self.data.srf_file = Some(v.into()),
            "gradcheck_batch" => self.gradcheck.batch = parse(key, v)?,
            "gradcheck_size" => self.gradcheck.size = parse(key, v)?,
            "gradcheck_coords" => self.gradcheck.coords_per_group = parse(key, v)?,
            "gradcheck_h" => self.gradcheck.h = parse(key, v)?,
            "gradcheck_tol" => self.gradcheck.tol = parse(key, v)?,
            "gradcheck_abs_floor" => self.gradcheck.abs_floor = parse(key, v)?,
            "data_dir" => self.paths.data_dir = Some(v.into()),
            "out_dir" => self.paths.out_dir = Some(v.into()),
            "checkpoint" => self.paths.checkpoint = Some(v.into()),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.train.seed = seed;
        self.gradcheck.seed = seed;
    }

    pub fn seed(&self) -> u64 {
        self.train.seed
    }

    /// Cross-field checks; run before any subcommand starts work.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        self.metric.validate()?;
        let r = self.model.upsample_factor;
        if self.data.size == 0 || self.data.size % r != 0 {
            return Err(Error::Config(format!(
                "data_size {} is not a positive multiple of ratio {r}",
                self.data.size
            )));
        }
        if self.model.c_hr == 0 || self.model.c_lr == 0 {
            return Err(Error::Config("c_lr and c_hr must be positive".into()));
        }
        if self.gradcheck.size == 0 || self.gradcheck.batch == 0 || self.gradcheck.coords_per_group == 0 {
            return Err(Error::Config(
                "gradcheck batch, size and coords must be positive".into(),
            ));
        }
        if !(self.gradcheck.h > 0.0 && self.gradcheck.tol > 0.0) {
            return Err(Error::Config("gradcheck_h and gradcheck_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn srf(&self) -> Result<laconv_core::Matrix> {
        let srf = match &self.data.srf_file {
            Some(p) => read_srf(p)?,
            None => default_srf(self.model.c_hr, self.model.c_lr)?,
        };
        if srf.rows() != self.model.c_hr || srf.cols() != self.model.c_lr {
            return Err(Error::Config(format!(
                "srf is {}×{}, config needs c_hr×c_lr = {}×{}",
                srf.rows(),
                srf.cols(),
                self.model.c_hr,
                self.model.c_lr
            )));
        }
        Ok(srf)
    }

    pub fn dataset_spec(&self) -> Result<DatasetSpec> {
        let spec = DatasetSpec {
            scene: SceneSpec {
                seed: self.seed(),
                bands: self.model.c_lr,
                size: self.data.size,
                n_shapes: self.data.n_shapes,
                smoothness: self.data.smoothness,
            },
            degrade: DegradeSpec {
                ratio: self.model.upsample_factor,
                kernel_size: self.data.blur_kernel,
                sigma: self.data.blur_sigma,
                srf: self.srf()?,
            },
            count: self.data.count,
            fractions: SplitFractions {
                train: self.data.train_fraction,
                val: self.data.val_fraction,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl DataSettings {
    /// Four training samples and one test sample of 16×16, smooth scenes only.
    pub fn toy() -> Self {
        DataSettings {
            count: 5,
            size: 16,
            n_shapes: 0,
            smoothness: 3.0,
            train_fraction: 0.8,
            val_fraction: 0.0,
            blur_kernel: 3,
            blur_sigma: 0.5,
            srf_file: None,
        }
    }
}

/// The `--help` key reference.
pub fn key_reference() -> String {
    let mut s = String::from("Config keys (key = value, # comments, unknown keys rejected):\n");
    for (k, d) in KEYS {
        s += &format!("  {k:<20} {d}\n");
    }
    s
}
