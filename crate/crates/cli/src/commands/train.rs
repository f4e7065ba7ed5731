use std::path::Path;

use laconv_core::datasim::Split;
use laconv_core::laresnet::init_params;
use laconv_core::optim::{train, TrainSets};
use laconv_core::{Error, Result};

use super::{load_dataset, load_model};
use crate::config::RunConfig;
use crate::EXIT_OK;

pub fn run(cfg: &RunConfig, data: &Path, out: &Path, init: Option<&Path>) -> Result<i32> {
    let model = cfg.model;
    let params = match init {
        Some(dir) => {
            let (saved, params) = load_model(dir)?;
            if saved != model {
                return Err(Error::Config(format!(
                    "checkpoint {} was saved for a different model configuration",
                    dir.display()
                )));
            }
            params
        }
        None => init_params(&model, cfg.seed())?,
    };
    let ds = load_dataset(data)?;
    let sets = TrainSets {
        train: ds.samples(Split::Train)?,
        val: ds.samples(Split::Val)?,
    };
    if sets.train.is_empty() {
        return Err(Error::Config(format!(
            "dataset {} has an empty train split",
            data.display()
        )));
    }
    sets.train[0].check_against(&model)?;
    let outcome = train(&model, &cfg.train, &sets, params, out)?;
    println!(
        "trained {} epochs ({} steps): final loss {:.6e}, best epoch {} ({:.6e}); checkpoints in {}",
        outcome.history.len(),
        outcome.steps,
        outcome.final_loss(),
        outcome.best_epoch,
        outcome.best_loss,
        out.display()
    );
    Ok(EXIT_OK)
}
