use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskPreset {
    Pansharpening,
    Hisr,
    Toy,
}

impl fmt::Display for TaskPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskPreset::Pansharpening => "pansharpening",
            TaskPreset::Hisr => "hisr",
            TaskPreset::Toy => "toy",
        })
    }
}

impl FromStr for TaskPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pansharpening" => Ok(TaskPreset::Pansharpening),
            "hisr" => Ok(TaskPreset::Hisr),
            "toy" => Ok(TaskPreset::Toy),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (pansharpening|hisr|toy)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr_phase1: f64,
    pub lr_phase2: f64,
    pub phase_split: usize,
    pub seed: u64,
    pub preset: TaskPreset,
}

impl TrainConfig {
    pub fn pansharpening() -> Self {
        TrainConfig {
            epochs: 1000,
            batch_size: 32,
            lr_phase1: 1e-3,
            lr_phase2: 1e-4,
            phase_split: 500,
            seed: 0,
            preset: TaskPreset::Pansharpening,
        }
    }

    pub fn hisr() -> Self {
        TrainConfig {
            epochs: 550,
            batch_size: 32,
            lr_phase1: 1e-3,
            lr_phase2: 1e-3,
            phase_split: 550,
            seed: 0,
            preset: TaskPreset::Hisr,
        }
    }

    /// The pansharpening recipe scaled down: one full batch of 4 samples per
    /// epoch, so epochs equal Adam steps.
    pub fn toy() -> Self {
        TrainConfig {
            epochs: 2000,
            batch_size: 4,
            lr_phase1: 1e-3,
            lr_phase2: 1e-4,
            phase_split: 1000,
            seed: 0,
            preset: TaskPreset::Toy,
        }
    }

    pub fn for_preset(preset: TaskPreset) -> Self {
        match preset {
            TaskPreset::Pansharpening => Self::pansharpening(),
            TaskPreset::Hisr => Self::hisr(),
            TaskPreset::Toy => Self::toy(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.phase_split > self.epochs {
            return Err(Error::Config(format!(
                "phase_split {} exceeds epochs {}",
                self.phase_split, self.epochs
            )));
        }
        for (name, lr) in [("lr_phase1", self.lr_phase1), ("lr_phase2", self.lr_phase2)] {
            if !(lr.is_finite() && lr > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {lr}")));
            }
        }
        Ok(())
    }
}

/// Learning rate for `epoch`; the HISR recipe keeps the first rate throughout.
pub fn lr_at(epoch: usize, config: &TrainConfig) -> f64 {
    if config.preset == TaskPreset::Hisr || epoch < config.phase_split {
        config.lr_phase1
    } else {
        config.lr_phase2
    }
}
