//! On-disk datasets: four `.ten` files per sample and a tab-separated
//! `manifest.tsv` with one line per sample:
//!
//! ```text
//! id  split  gt_path  lr_path  lrup_path  hr_path
//! ```
//!
//! Paths are relative to the dataset directory. `dataset.cfg` echoes the
//! generation settings and `srf.txt` holds the spectral response used.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;

use super::degrade::{wald_degrade, DegradeSpec};
use super::scene::{gen_scene, SceneSpec};
use super::srf::{srf_project, write_srf};
use crate::error::{Error, Result};
use crate::laresnet::FusionSample;
use crate::ops::{upsample, Interpolation};
use crate::rng;
use crate::tenfile::{read_ten, write_ten};
use crate::tensor::Tensor4;

pub const MANIFEST: &str = "manifest.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// Fractions of the samples assigned to train and validation; the rest is test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
}

impl SplitFractions {
    /// Sample counts per split. Samples are assigned in index order:
    /// train first, then validation, then test.
    pub fn counts(&self, count: usize) -> Result<(usize, usize, usize)> {
        let ok = |f: f64| (0.0..=1.0).contains(&f);
        if !ok(self.train) || !ok(self.val) || self.train + self.val > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "split fractions train={} val={} must be in [0,1] and sum to at most 1",
                self.train, self.val
            )));
        }
        let train = (count as f64 * self.train).round() as usize;
        let val = ((count as f64 * self.val).round() as usize).min(count - train);
        Ok((train, val, count - train - val))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    /// `scene.seed` is the master seed; sample i uses a seed derived from it.
    pub scene: SceneSpec,
    pub degrade: DegradeSpec,
    pub count: usize,
    pub fractions: SplitFractions,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        self.degrade.validate()?;
        self.scene.validate(self.degrade.ratio)?;
        if self.degrade.srf.cols() != self.scene.bands {
            return Err(Error::Config(format!(
                "srf has {} columns but scenes have {} bands",
                self.degrade.srf.cols(),
                self.scene.bands
            )));
        }
        if self.count == 0 {
            return Err(Error::Config("dataset count must be at least 1".into()));
        }
        self.fractions.counts(self.count)?;
        Ok(())
    }

    fn config_text(&self) -> String {
        let s = &self.scene;
        let d = &self.degrade;
        format!(
            "seed={}\nbands={}\nsize={}\nn_shapes={}\nsmoothness={}\nratio={}\nblur_kernel={}\nblur_sigma={}\n\
             c_hr={}\ncount={}\ntrain_fraction={}\nval_fraction={}\n",
            s.seed,
            s.bands,
            s.size,
            s.n_shapes,
            s.smoothness,
            d.ratio,
            d.kernel_size,
            d.sigma,
            d.srf.rows(),
            self.count,
            self.fractions.train,
            self.fractions.val
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetEntry {
    pub id: String,
    pub split: Split,
    pub gt: PathBuf,
    pub lr: PathBuf,
    pub lr_up: PathBuf,
    pub hr: PathBuf,
}

/// The four tensors of one generated sample.
pub struct Generated {
    pub gt: Tensor4,
    pub lr: Tensor4,
    pub lr_up: Tensor4,
    pub hr: Tensor4,
}

/// Generates sample `index` under `spec` in memory.
pub fn generate_sample(spec: &DatasetSpec, index: usize) -> Result<Generated> {
    let seed = rng::derived(spec.scene.seed, index as u64).random::<u64>();
    let gt = gen_scene(&SceneSpec { seed, ..spec.scene })?;
    let lr = wald_degrade(&gt, &spec.degrade)?;
    let hr = srf_project(&gt, &spec.degrade.srf)?;
    let lr_up = upsample(&lr, spec.degrade.ratio, Interpolation::Bicubic)?;
    Ok(Generated { gt, lr, lr_up, hr })
}

/// Writes `spec.count` samples and the manifest into `out`.
pub fn make_dataset(spec: &DatasetSpec, out: &Path) -> Result<Dataset> {
    spec.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let (n_train, n_val, _) = spec.fractions.counts(spec.count)?;
    let mut entries = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        let split = if i < n_train {
            Split::Train
        } else if i < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
        let id = format!("{i:05}");
        let g = generate_sample(spec, i)?;
        let entry = DatasetEntry {
            gt: format!("{id}_gt.ten").into(),
            lr: format!("{id}_lr.ten").into(),
            lr_up: format!("{id}_lrup.ten").into(),
            hr: format!("{id}_hr.ten").into(),
            id,
            split,
        };
        for (rel, t) in [
            (&entry.gt, &g.gt),
            (&entry.lr, &g.lr),
            (&entry.lr_up, &g.lr_up),
            (&entry.hr, &g.hr),
        ] {
            write_ten(&out.join(rel), t)?;
        }
        entries.push(entry);
    }
    let cfg = out.join("dataset.cfg");
    fs::write(&cfg, spec.config_text()).map_err(|e| Error::io(&cfg, e))?;
    write_srf(&out.join("srf.txt"), &spec.degrade.srf)?;
    let dataset = Dataset {
        root: out.to_path_buf(),
        entries,
    };
    dataset.write_manifest()?;
    log::info!("wrote {} samples to {}", spec.count, out.display());
    Ok(dataset)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    pub entries: Vec<DatasetEntry>,
}

impl Dataset {
    fn write_manifest(&self) -> Result<()> {
        let mut text = String::from("# id\tsplit\tgt\tlr\tlrup\thr\n");
        for e in &self.entries {
            text += &format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                e.id,
                e.split,
                e.gt.display(),
                e.lr.display(),
                e.lr_up.display(),
                e.hr.display()
            );
        }
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: &Path) -> Result<Dataset> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 6 {
                return Err(Error::format(
                    &path,
                    format!("line {}: expected 6 fields, got {}", i + 1, f.len()),
                ));
            }
            let split = f[1]
                .parse()
                .map_err(|_| Error::format(&path, format!("line {}: bad split `{}`", i + 1, f[1])))?;
            entries.push(DatasetEntry {
                id: f[0].to_string(),
                split,
                gt: f[2].into(),
                lr: f[3].into(),
                lr_up: f[4].into(),
                hr: f[5].into(),
            });
        }
        Ok(Dataset {
            root: dir.to_path_buf(),
            entries,
        })
    }

    pub fn split(&self, split: Split) -> Vec<&DatasetEntry> {
        self.entries.iter().filter(|e| e.split == split).collect()
    }

    pub fn read(&self, rel: &Path) -> Result<Tensor4> {
        read_ten(&self.root.join(rel))
    }

    /// The (lr_up, hr, gt) triple of one entry.
    pub fn sample(&self, entry: &DatasetEntry) -> Result<FusionSample> {
        FusionSample::new(
            self.read(&entry.lr_up)?,
            self.read(&entry.hr)?,
            Some(self.read(&entry.gt)?),
        )
    }

    pub fn samples(&self, split: Split) -> Result<Vec<FusionSample>> {
        self.split(split).into_iter().map(|e| self.sample(e)).collect()
    }
}
