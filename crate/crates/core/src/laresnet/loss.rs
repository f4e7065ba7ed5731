use crate::error::{Error, Result};
use crate::tensor::Tensor4;

#[derive(Debug, Clone)]
pub struct MseLoss {
    /// `(1/N) Σ_samples ‖sr − gt‖²_F`
    pub loss: f64,
    /// `loss / (c·h·w)`, i.e. the plain mean squared error per element.
    pub per_element: f64,
    /// ∂loss/∂sr = (2/N)(sr − gt)
    pub cotangent: Tensor4,
}

pub fn loss_mse(sr: &Tensor4, gt: &Tensor4) -> Result<MseLoss> {
    if sr.dims() != gt.dims() {
        return Err(Error::Shape(format!("loss: sr {:?} vs gt {:?}", sr.dims(), gt.dims())));
    }
    let [n, c, h, w] = sr.dims();
    if n == 0 || c * h * w == 0 {
        return Err(Error::Shape("loss over an empty tensor".into()));
    }
    let diff = sr.zip_map(gt, |a, b| a - b)?;
    let sum_sq: f64 = diff.data().iter().map(|d| d * d).sum();
    let loss = sum_sq / n as f64;
    Ok(MseLoss {
        loss,
        per_element: loss / (c * h * w) as f64,
        cotangent: diff.scale(2.0 / n as f64),
    })
}
