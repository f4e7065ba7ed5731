use super::generator::LocalWeights;
use crate::error::{Error, Result};
use crate::ops::{conv_cols, conv_cols_vjp, fold, unfold, Unfolded};
use crate::tensor::{ConvKernel, PadMode, Tensor4};

#[derive(Debug, Clone)]
pub struct ModulatedGrads {
    pub input: Tensor4,
    pub weights: Tensor4,
    pub kernel: Tensor4,
}

pub(crate) fn check_weights(cols: &Unfolded, weights: &Tensor4) -> Result<()> {
    let (h, w) = cols.spatial();
    let kk = cols.k() * cols.k();
    if weights.dims() != [cols.n(), kk, h, w] {
        return Err(Error::Shape(format!(
            "local weights {:?} inconsistent with kernel size {} on {}x{}x{} input",
            weights.dims(),
            cols.k(),
            cols.n(),
            h,
            w
        )));
    }
    Ok(())
}

/// Scales patch row `ci·k² + q` at pixel p by `weights[n, q, p]`; the same
/// k² weights are duplicated over every input channel.
pub(crate) fn modulate(cols: &Unfolded, weights: &Tensor4) -> Unfolded {
    let kk = cols.k() * cols.k();
    let hw = cols.cols();
    let mut data = cols.data().to_vec();
    let per_sample = cols.rows() * hw;
    for ni in 0..cols.n() {
        let sample = &mut data[ni * per_sample..(ni + 1) * per_sample];
        for (row, chunk) in sample.chunks_mut(hw).enumerate() {
            let wq = weights.plane(ni, row % kk);
            for (v, s) in chunk.iter_mut().zip(wq) {
                *v *= s;
            }
        }
    }
    cols.with_data(data)
}

/// Returns (∂/∂cols, ∂/∂weights, ∂/∂kernel) of `K · modulate(cols, weights)`.
pub(crate) fn modulated_backward(
    cols: &Unfolded,
    scaled: &Unfolded,
    weights: &Tensor4,
    kernel: &ConvKernel,
    cotangent: &Tensor4,
) -> (Unfolded, Tensor4, Vec<f64>) {
    let kk = cols.k() * cols.k();
    let hw = cols.cols();
    let (d_scaled, d_kernel) = conv_cols_vjp(scaled, kernel.as_matrix_data(), kernel.c_out(), cotangent);
    let mut d_weights = Tensor4::zeros(weights.dims());
    let mut d_cols = d_scaled.clone();
    for ni in 0..cols.n() {
        let ds = d_scaled.sample(ni);
        let cs = cols.sample(ni);
        for row in 0..cols.rows() {
            let q = row % kk;
            let range = row * hw..(row + 1) * hw;
            let dw = d_weights.plane_mut(ni, q);
            for ((acc, &g), &c) in dw.iter_mut().zip(&ds[range.clone()]).zip(&cs[range.clone()]) {
                *acc += g * c;
            }
        }
        let wsample = weights.sample(ni);
        for (row, chunk) in d_cols.sample_mut(ni).chunks_mut(hw).enumerate() {
            let q = row % kk;
            for (v, s) in chunk.iter_mut().zip(&wsample[q * hw..(q + 1) * hw]) {
                *v *= s;
            }
        }
    }
    (d_cols, d_weights, d_kernel)
}

/// Convolution with a kernel rescaled per pixel:
/// `out[n,co,i,j] = Σ_{ci,u,v} pad(x)[n,ci,i+u,j+v] · W[n,u·k+v,i,j] · K[co,ci,u,v]`.
pub fn modulated_conv(input: &Tensor4, weights: &LocalWeights, kernel: &ConvKernel, pad: PadMode) -> Result<Tensor4> {
    check_kernel(input, kernel)?;
    let cols = unfold(input, kernel.k(), pad)?;
    check_weights(&cols, weights.tensor())?;
    let scaled = modulate(&cols, weights.tensor());
    Ok(conv_cols(&scaled, kernel.as_matrix_data(), kernel.c_out(), None))
}

pub fn modulated_conv_vjp(
    input: &Tensor4,
    weights: &LocalWeights,
    kernel: &ConvKernel,
    pad: PadMode,
    cotangent: &Tensor4,
) -> Result<ModulatedGrads> {
    check_kernel(input, kernel)?;
    cotangent.expect_dims(
        [input.n(), kernel.c_out(), input.h(), input.w()],
        "modulated_conv cotangent",
    )?;
    let cols = unfold(input, kernel.k(), pad)?;
    check_weights(&cols, weights.tensor())?;
    let scaled = modulate(&cols, weights.tensor());
    let (d_cols, d_weights, d_kernel) = modulated_backward(&cols, &scaled, weights.tensor(), kernel, cotangent);
    Ok(ModulatedGrads {
        input: fold(&d_cols),
        weights: d_weights,
        kernel: Tensor4::from_vec(kernel.weights().dims(), d_kernel)?,
    })
}

fn check_kernel(input: &Tensor4, kernel: &ConvKernel) -> Result<()> {
    if input.c() != kernel.c_in() {
        return Err(Error::Shape(format!(
            "modulated_conv: input has {} channels, kernel expects {}",
            input.c(),
            kernel.c_in()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::conv2d;
    use crate::rng::{seeded, uniform_tensor};
    use crate::testutil::{check_close, finite_diff, random_tensor};

    /// Direct six-loop evaluation of the per-pixel scaled kernel.
    fn naive(x: &Tensor4, wts: &Tensor4, k: &ConvKernel, pad: PadMode) -> Tensor4 {
        let [n, c_in, h, w] = x.dims();
        let ks = k.k();
        let r = (ks / 2) as isize;
        Tensor4::from_fn([n, k.c_out(), h, w], |[ni, co, i, j]| {
            let mut acc = 0.0;
            for ci in 0..c_in {
                for u in 0..ks {
                    for v in 0..ks {
                        let si = pad.resolve(i as isize + u as isize - r, h);
                        let sj = pad.resolve(j as isize + v as isize - r, w);
                        if let (Some(si), Some(sj)) = (si, sj) {
                            let scaled = wts.get([ni, u * ks + v, i, j]) * k.weights().get([co, ci, u, v]);
                            acc += x.get([ni, ci, si, sj]) * scaled;
                        }
                    }
                }
            }
            acc
        })
    }

    #[test]
    fn matches_nested_loops() {
        for seed in 0..10 {
            let x = random_tensor([1, 2, 5, 5], seed);
            let k = ConvKernel::new(random_tensor([3, 2, 3, 3], 50 + seed)).unwrap();
            let w = LocalWeights(uniform_tensor([1, 9, 5, 5], 0.0, 1.0, &mut seeded(90 + seed)));
            for pad in [PadMode::Zero, PadMode::Circular] {
                let fast = modulated_conv(&x, &w, &k, pad).unwrap();
                let slow = naive(&x, w.tensor(), &k, pad);
                assert!(fast.max_abs_diff(&slow).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn unit_and_zero_weights() {
        let x = random_tensor([2, 3, 6, 6], 1);
        let k = ConvKernel::new(random_tensor([4, 3, 3, 3], 2)).unwrap();
        let ones = LocalWeights(Tensor4::filled([2, 9, 6, 6], 1.0));
        let a = modulated_conv(&x, &ones, &k, PadMode::Zero).unwrap();
        let b = conv2d(&x, &k, None, PadMode::Zero).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() <= 1e-12);
        let zeros = LocalWeights(Tensor4::zeros([2, 9, 6, 6]));
        assert!(modulated_conv(&x, &zeros, &k, PadMode::Zero)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn inconsistent_weights_rejected() {
        let x = random_tensor([1, 2, 5, 5], 1);
        let k = ConvKernel::new(random_tensor([1, 2, 3, 3], 2)).unwrap();
        let w = LocalWeights(Tensor4::filled([1, 25, 5, 5], 1.0));
        assert!(matches!(
            modulated_conv(&x, &w, &k, PadMode::Zero),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn vjp_matches_finite_differences() {
        let x = random_tensor([2, 2, 5, 4], 3);
        let k = ConvKernel::new(random_tensor([3, 2, 3, 3], 4)).unwrap();
        let w = LocalWeights(uniform_tensor([2, 9, 5, 4], 0.0, 1.0, &mut seeded(5)));
        let g = random_tensor([2, 3, 5, 4], 6);
        let pad = PadMode::Zero;
        let an = modulated_conv_vjp(&x, &w, &k, pad, &g).unwrap();
        let probe = |x: &Tensor4, w: &Tensor4, k: &Tensor4| {
            let k = ConvKernel::new(k.clone()).unwrap();
            modulated_conv(x, &LocalWeights(w.clone()), &k, pad)
                .unwrap()
                .dot(&g)
                .unwrap()
        };
        let t = |d: &[f64], dims| Tensor4::from_vec(dims, d.to_vec()).unwrap();
        let fd = finite_diff(x.data(), |d| probe(&t(d, x.dims()), w.tensor(), k.weights()));
        check_close(an.input.data(), &fd, "modulated input");
        let fd = finite_diff(w.tensor().data(), |d| probe(&x, &t(d, w.tensor().dims()), k.weights()));
        check_close(an.weights.data(), &fd, "modulated weights");
        let fd = finite_diff(k.weights().data(), |d| probe(&x, w.tensor(), &t(d, k.weights().dims())));
        check_close(an.kernel.data(), &fd, "modulated kernel");
    }
}
