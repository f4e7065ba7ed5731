use crate::error::{Error, Result};
use crate::tensor::Tensor4;

/// Channel concatenation `[a; b]`, `a`'s channels first.
pub fn concat_channels(a: &Tensor4, b: &Tensor4) -> Result<Tensor4> {
    check_spatial(a, b)?;
    let [n, ca, h, w] = a.dims();
    let cb = b.c();
    let mut out = Tensor4::zeros([n, ca + cb, h, w]);
    for ni in 0..n {
        let dst = out.sample_mut(ni);
        let split = ca * h * w;
        dst[..split].copy_from_slice(a.sample(ni));
        dst[split..].copy_from_slice(b.sample(ni));
    }
    Ok(out)
}

/// VJP of [`concat_channels`]: slices the cotangent at channel `first_channels`.
pub fn split_channels(t: &Tensor4, first_channels: usize) -> Result<(Tensor4, Tensor4)> {
    let [n, c, h, w] = t.dims();
    if first_channels > c {
        return Err(Error::Shape(format!("cannot split {c} channels at {first_channels}")));
    }
    let mut a = Tensor4::zeros([n, first_channels, h, w]);
    let mut b = Tensor4::zeros([n, c - first_channels, h, w]);
    let split = first_channels * h * w;
    for ni in 0..n {
        let src = t.sample(ni);
        a.sample_mut(ni).copy_from_slice(&src[..split]);
        b.sample_mut(ni).copy_from_slice(&src[split..]);
    }
    Ok((a, b))
}

/// Elementwise sum; its VJP hands the cotangent unchanged to both operands.
pub fn add(a: &Tensor4, b: &Tensor4) -> Result<Tensor4> {
    check_spatial(a, b)?;
    a.zip_map(b, |x, y| x + y)
}

fn check_spatial(a: &Tensor4, b: &Tensor4) -> Result<()> {
    if a.n() != b.n() || a.h() != b.h() || a.w() != b.w() {
        return Err(Error::Shape(format!(
            "operands {:?} and {:?} disagree in sample or spatial dims",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}
