//! Fusion quality indices. All functions are pure; multi-sample tensors are
//! treated as one pooled population unless noted.

mod config;
mod q2n;
mod qnr;
mod report;
mod simple;
mod ssim;

pub use config::MetricConfig;
pub use q2n::{q2n, uiqi, Hypercomplex};
pub use qnr::{qnr_suite, QnrScores};
pub use report::{MetricReport, Summary};
pub use simple::{ergas, psnr, sam, scc};
pub use ssim::ssim;

use crate::error::{Error, Result};
use crate::tensor::Tensor4;

fn check_same(x: &Tensor4, y: &Tensor4, what: &str) -> Result<()> {
    if x.dims() != y.dims() {
        return Err(Error::Shape(format!("{what}: {:?} vs {:?}", x.dims(), y.dims())));
    }
    if x.is_empty() {
        return Err(Error::Shape(format!("{what}: empty input")));
    }
    Ok(())
}

/// Values of band `c` across all samples, in sample order.
fn band_values(t: &Tensor4, c: usize) -> Vec<f64> {
    (0..t.n()).flat_map(|n| t.plane(n, c).iter().copied()).collect()
}
