use std::path::Path;

use laconv_core::datasim::{make_dataset, Split};
use laconv_core::Result;

use crate::config::RunConfig;
use crate::EXIT_OK;

pub fn run(cfg: &RunConfig, out: &Path) -> Result<i32> {
    let spec = cfg.dataset_spec()?;
    let ds = make_dataset(&spec, out)?;
    println!(
        "wrote {} samples to {} (train {}, val {}, test {})",
        ds.entries.len(),
        out.display(),
        ds.split(Split::Train).len(),
        ds.split(Split::Val).len(),
        ds.split(Split::Test).len()
    );
    Ok(EXIT_OK)
}
