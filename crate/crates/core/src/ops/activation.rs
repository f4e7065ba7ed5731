use std::fmt;

use crate::tensor::{Matrix, Tensor4};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative expressed through the forward output `y`.
    #[inline]
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            // y > 0 exactly when x > 0; subgradient 0 at the kink
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        })
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    // split on sign so exp never overflows
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Containers an elementwise activation can act on.
pub trait Elementwise: Sized {
    fn values(&self) -> &[f64];
    fn values_mut(&mut self) -> &mut [f64];
}

impl Elementwise for Tensor4 {
    fn values(&self) -> &[f64] {
        self.data()
    }
    fn values_mut(&mut self) -> &mut [f64] {
        self.data_mut()
    }
}

impl Elementwise for Matrix {
    fn values(&self) -> &[f64] {
        self.data()
    }
    fn values_mut(&mut self) -> &mut [f64] {
        self.data_mut()
    }
}

pub fn activation<T: Elementwise + Clone>(input: &T, kind: Activation) -> T {
    let mut out = input.clone();
    for v in out.values_mut() {
        *v = kind.apply(*v);
    }
    out
}

/// VJP given the forward output; returns `cotangent ⊙ f'(x)`.
pub fn activation_vjp<T: Elementwise + Clone>(output: &T, kind: Activation, cotangent: &T) -> T {
    debug_assert_eq!(output.values().len(), cotangent.values().len());
    let mut out = cotangent.clone();
    for (g, &y) in out.values_mut().iter_mut().zip(output.values()) {
        *g *= kind.derivative_from_output(y);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_tensor;

    #[test]
    fn scalar_values() {
        assert_eq!(Activation::Relu.apply(-2.0), 0.0);
        assert_eq!(Activation::Relu.apply(3.0), 3.0);
        assert_eq!(Activation::Sigmoid.apply(0.0), 0.5);
    }

    #[test]
    fn sigmoid_vjp_at_zero_is_quarter() {
        let x = Tensor4::zeros([1, 1, 1, 1]);
        let y = activation(&x, Activation::Sigmoid);
        let g = Tensor4::filled([1, 1, 1, 1], 3.0);
        assert_eq!(activation_vjp(&y, Activation::Sigmoid, &g).data(), &[0.75]);
    }

    #[test]
    fn ranges() {
        let x = random_tensor([2, 3, 4, 4], 9).scale(40.0);
        assert!(activation(&x, Activation::Relu).data().iter().all(|&v| v >= 0.0));
        // strict bounds hold until exp(-|x|) drops below half an ulp of 1
        let moderate = random_tensor([2, 3, 4, 4], 10).scale(20.0);
        assert!(activation(&moderate, Activation::Sigmoid)
            .data()
            .iter()
            .all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn vjp_matches_finite_differences() {
        let x = random_tensor([1, 2, 3, 3], 4);
        let g = random_tensor([1, 2, 3, 3], 5);
        for kind in [Activation::Relu, Activation::Sigmoid] {
            let y = activation(&x, kind);
            let an = activation_vjp(&y, kind, &g);
            for i in 0..x.len() {
                let h = 1e-5;
                let (mut p, mut m) = (x.clone(), x.clone());
                p.data_mut()[i] += h;
                m.data_mut()[i] -= h;
                let fd = (activation(&p, kind).dot(&g).unwrap() - activation(&m, kind).dot(&g).unwrap()) / (2.0 * h);
                assert!((fd - an.data()[i]).abs() < 1e-8, "{kind}: {fd} vs {}", an.data()[i]);
            }
        }
    }
}
