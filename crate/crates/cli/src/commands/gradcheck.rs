use std::path::Path;

use laconv_core::optim::gradcheck;
use laconv_core::Result;

use super::write_file;
use crate::config::RunConfig;
use crate::{EXIT_INVALID, EXIT_OK};

pub fn run(cfg: &RunConfig, h: Option<f64>, tol: Option<f64>, out: Option<&Path>) -> Result<i32> {
    let mut spec = cfg.gradcheck;
    spec.h = h.unwrap_or(spec.h);
    spec.tol = tol.unwrap_or(spec.tol);
    let report = gradcheck(&cfg.model, &spec)?;
    let table = report.to_table();
    print!("{table}");
    if let Some(path) = out {
        write_file(path, &table)?;
    }
    if report.passed() {
        println!("gradcheck passed (worst relative error {:.3e})", report.worst());
        Ok(EXIT_OK)
    } else {
        println!("gradcheck FAILED (tolerance {:.1e})", report.tol);
        Ok(EXIT_INVALID)
    }
}
