//! The training loop.
//!
//! Output directory layout:
//!
//! ```text
//! train.log     epoch \t lr \t loss \t wall_seconds
//! val.log       epoch \t val_loss            (only with a validation set)
//! initial/      checkpoint before the first update
//! best/         lowest validation loss (train loss without a validation set)
//! final/        after the last epoch
//! last_good/    written instead of the above when training diverges
//! ```
//!
//! Logged losses are per-element MSE. The train loss of an epoch averages the
//! per-batch losses measured before each update, weighted by batch size.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;

use super::adam::{adam_step, AdamState};
use super::schedule::{lr_at, TrainConfig};
use crate::error::{Error, Result};
use crate::laresnet::checkpoint::save_checkpoint;
use crate::laresnet::{backward, forward, forward_with, loss_mse, FusionSample, LAResNetParams, ModelConfig};
use crate::params::ParamSet;
use crate::rng;

/// Single-sample training and optional validation sets; every sample must
/// carry ground truth.
#[derive(Debug, Clone)]
pub struct TrainSets {
    pub train: Vec<FusionSample>,
    pub val: Vec<FusionSample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub loss: f64,
    pub wall_seconds: f64,
    pub val_loss: Option<f64>,
}

impl EpochLog {
    pub fn log_line(&self) -> String {
        format!(
            "{}\t{:e}\t{:.17e}\t{:.3}",
            self.epoch, self.lr, self.loss, self.wall_seconds
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: LAResNetParams,
    pub history: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub steps: usize,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |e| e.loss)
    }
}

/// Mean per-element MSE of `params` over `samples`.
pub fn evaluate_loss(params: &LAResNetParams, config: &ModelConfig, samples: &[FusionSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Config("cannot evaluate an empty sample set".into()));
    }
    let mut total = 0.0;
    let mut count = 0;
    for s in samples {
        let gt =
            s.gt.as_ref()
                .ok_or_else(|| Error::Config("sample without ground truth".into()))?;
        total += loss_mse(&forward(params, s, config)?, gt)?.per_element * s.len() as f64;
        count += s.len();
    }
    Ok(total / count as f64)
}

fn check_sets(model: &ModelConfig, sets: &TrainSets) -> Result<()> {
    if sets.train.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    for s in sets.train.iter().chain(&sets.val) {
        s.check_against(model)?;
        if s.gt.is_none() {
            return Err(Error::Config("training samples need ground truth".into()));
        }
    }
    Ok(())
}

struct LogFiles {
    train: fs::File,
    train_path: PathBuf,
    val: Option<(fs::File, PathBuf)>,
}

impl LogFiles {
    fn create(out: &Path, with_val: bool) -> Result<Self> {
        let open = |p: PathBuf| {
            fs::File::create(&p)
                .map(|f| (f, p.clone()))
                .map_err(|e| Error::io(&p, e))
        };
        let (train, train_path) = open(out.join("train.log"))?;
        let val = if with_val {
            Some(open(out.join("val.log"))?)
        } else {
            None
        };
        Ok(LogFiles { train, train_path, val })
    }

    fn append(&mut self, entry: &EpochLog) -> Result<()> {
        writeln!(self.train, "{}", entry.log_line()).map_err(|e| Error::io(&self.train_path, e))?;
        if let (Some((f, p)), Some(v)) = (self.val.as_mut(), entry.val_loss) {
            writeln!(f, "{}\t{:.17e}", entry.epoch, v).map_err(|e| Error::io(p.as_path(), e))?;
        }
        Ok(())
    }
}

fn diverged(out: &Path, model: &ModelConfig, params: &LAResNetParams, what: String) -> Error {
    let dir = out.join("last_good");
    match save_checkpoint(&dir, model, params) {
        Ok(()) => Error::Numeric(format!("{what}; last good checkpoint at {}", dir.display())),
        Err(e) => Error::Numeric(format!("{what}; saving last good checkpoint failed: {e}")),
    }
}

/// Trains from `init`, writing logs and checkpoints under `out`.
pub fn train(
    model: &ModelConfig,
    config: &TrainConfig,
    sets: &TrainSets,
    init: LAResNetParams,
    out: &Path,
) -> Result<TrainOutcome> {
    model.validate()?;
    config.validate()?;
    check_sets(model, sets)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut logs = LogFiles::create(out, !sets.val.is_empty())?;

    let mut params = init;
    save_checkpoint(&out.join("initial"), model, &params)?;
    let mut adam = AdamState::new(params.num_params());
    let mut shuffle_rng = rng::seeded(config.seed);
    let mut order: Vec<usize> = (0..sets.train.len()).collect();
    let started = Instant::now();
    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64)> = None;
    let mut steps = 0;

    for epoch in 0..config.epochs {
        let lr = lr_at(epoch, config);
        order.shuffle(&mut shuffle_rng);
        let mut epoch_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let parts: Vec<&FusionSample> = chunk.iter().map(|&i| &sets.train[i]).collect();
            let batch = FusionSample::stack(&parts)?;
            let (sr, state) = forward_with(&params, &batch, model, true)?;
            let loss = loss_mse(&sr, batch.gt.as_ref().expect("checked in check_sets"))?;
            if !loss.loss.is_finite() {
                return Err(diverged(
                    out,
                    model,
                    &params,
                    format!("loss became {} at epoch {epoch}", loss.loss),
                ));
            }
            let grads = backward(&params, &state, &loss.cotangent)?;
            if let Err(e) = adam_step(&mut params, &grads.params, &mut adam, lr) {
                return Err(diverged(out, model, &params, format!("epoch {epoch}: {e}")));
            }
            epoch_sum += loss.per_element * chunk.len() as f64;
            steps += 1;
        }
        let loss = epoch_sum / sets.train.len() as f64;
        let val_loss = if sets.val.is_empty() {
            None
        } else {
            Some(evaluate_loss(&params, model, &sets.val)?)
        };
        let entry = EpochLog {
            epoch,
            lr,
            loss,
            wall_seconds: started.elapsed().as_secs_f64(),
            val_loss,
        };
        logs.append(&entry)?;
        log::debug!("epoch {epoch} lr {lr:e} loss {loss:.6e}");

        let score = val_loss.unwrap_or(loss);
        if best.is_none_or(|(_, b)| score < b) {
            best = Some((epoch, score));
            save_checkpoint(&out.join("best"), model, &params)?;
        }
        history.push(entry);
    }
    save_checkpoint(&out.join("final"), model, &params)?;
    let (best_epoch, best_loss) = match best {
        Some(b) => b,
        None => {
            // zero epochs: the initial parameters are both best and final
            save_checkpoint(&out.join("best"), model, &params)?;
            let scored = if sets.val.is_empty() { &sets.train } else { &sets.val };
            (0, evaluate_loss(&params, model, scored)?)
        }
    };
    log::info!(
        "trained {} epochs ({steps} steps); best epoch {best_epoch} loss {best_loss:.6e}",
        config.epochs
    );
    Ok(TrainOutcome {
        params,
        history,
        best_epoch,
        best_loss,
        steps,
    })
}
