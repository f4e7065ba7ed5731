use crate::error::{Error, Result};
use crate::tensor::{Matrix, Tensor4};

/// Spatial mean per (sample, channel) → (n × c).
pub fn global_avg_pool(input: &Tensor4) -> Result<Matrix> {
    let [n, c, h, w] = input.dims();
    if h * w == 0 {
        return Err(Error::Shape("global average pool over empty spatial dims".into()));
    }
    let area = (h * w) as f64;
    let mut out = Matrix::zeros(n, c);
    for ni in 0..n {
        for ci in 0..c {
            out.set(ni, ci, input.plane(ni, ci).iter().sum::<f64>() / area);
        }
    }
    Ok(out)
}

pub fn global_avg_pool_vjp(cotangent: &Matrix, h: usize, w: usize) -> Result<Tensor4> {
    if h * w == 0 {
        return Err(Error::Shape("global average pool over empty spatial dims".into()));
    }
    let area = (h * w) as f64;
    let (n, c) = (cotangent.rows(), cotangent.cols());
    let mut out = Tensor4::zeros([n, c, h, w]);
    for ni in 0..n {
        for ci in 0..c {
            out.plane_mut(ni, ci).fill(cotangent.get(ni, ci) / area);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{check_close, finite_diff, random_tensor};

    #[test]
    fn means() {
        let x = Tensor4::filled([1, 1, 3, 3], 7.0);
        assert_eq!(global_avg_pool(&x).unwrap().get(0, 0), 7.0);
        let x = Tensor4::from_vec([1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(global_avg_pool(&x).unwrap().get(0, 0), 2.5);
    }

    #[test]
    fn empty_is_shape_error() {
        assert!(global_avg_pool(&Tensor4::zeros([1, 1, 0, 3])).is_err());
    }

    #[test]
    fn vjp_spreads_uniformly() {
        let x = random_tensor([2, 3, 4, 5], 1);
        let g = Matrix::from_vec(2, 3, vec![1.0, -2.0, 0.5, 4.0, 0.0, 2.0]).unwrap();
        let an = global_avg_pool_vjp(&g, 4, 5).unwrap();
        assert!((an.get([0, 1, 2, 3]) + 2.0 / 20.0).abs() < 1e-15);
        let fd = finite_diff(x.data(), |d| {
            let p = global_avg_pool(&Tensor4::from_vec(x.dims(), d.to_vec()).unwrap()).unwrap();
            p.data().iter().zip(g.data()).map(|(a, b)| a * b).sum()
        });
        check_close(an.data(), &fd, "gap");
    }
}
