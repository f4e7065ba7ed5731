use crate::error::{Error, Result};
use crate::gemm;
use crate::tensor::{DenseLayer, Matrix};

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub input: Matrix,
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

/// `input · weightᵀ + bias`, applied to every row.
pub fn dense(input: &Matrix, layer: &DenseLayer) -> Result<Matrix> {
    check(input, layer)?;
    let (rows, outs) = (input.rows(), layer.outputs());
    let mut out = Matrix::zeros(rows, outs);
    for r in 0..rows {
        out.data_mut()[r * outs..(r + 1) * outs].copy_from_slice(&layer.bias);
    }
    gemm::matmul_a_bt(
        input.data(),
        layer.weight.data(),
        rows,
        layer.inputs(),
        outs,
        out.data_mut(),
    );
    Ok(out)
}

pub fn dense_vjp(input: &Matrix, layer: &DenseLayer, cotangent: &Matrix) -> Result<DenseGrads> {
    check(input, layer)?;
    if cotangent.rows() != input.rows() || cotangent.cols() != layer.outputs() {
        return Err(Error::Shape(format!(
            "dense cotangent is {}x{}, expected {}x{}",
            cotangent.rows(),
            cotangent.cols(),
            input.rows(),
            layer.outputs()
        )));
    }
    let (rows, ins, outs) = (input.rows(), layer.inputs(), layer.outputs());
    let mut d_input = Matrix::zeros(rows, ins);
    gemm::matmul(
        cotangent.data(),
        layer.weight.data(),
        rows,
        outs,
        ins,
        d_input.data_mut(),
    );
    let mut d_weight = Matrix::zeros(outs, ins);
    gemm::matmul_at_b(cotangent.data(), input.data(), rows, outs, ins, d_weight.data_mut());
    let mut d_bias = vec![0.0; outs];
    for r in 0..rows {
        for (b, g) in d_bias.iter_mut().zip(cotangent.row(r)) {
            *b += g;
        }
    }
    Ok(DenseGrads {
        input: d_input,
        weight: d_weight,
        bias: d_bias,
    })
}

fn check(input: &Matrix, layer: &DenseLayer) -> Result<()> {
    if input.cols() != layer.inputs() {
        return Err(Error::Shape(format!(
            "dense layer expects {} inputs, got {} columns",
            layer.inputs(),
            input.cols()
        )));
    }
    Ok(())
}
