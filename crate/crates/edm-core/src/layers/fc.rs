//! Fully-connected head.

use alloc::format;
use alloc::vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Dense layer: weights `[n_out, n_in]`, bias `[n_out]`; computes
/// `out = x * W^T + b` per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FcLayer<T = f32> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> FcLayer<T> {
    pub fn new(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let wd = weights.dims();
        if wd.len() != 2 {
            return Err(Error::Shape(format!("fc weights must be [n_out, n_in], got {wd:?}")));
        }
        if bias.dims() != [wd[0]] {
            return Err(Error::Shape(format!(
                "fc bias must be [{}], got {:?}",
                wd[0],
                bias.dims()
            )));
        }
        Ok(FcLayer { weights, bias })
    }

    pub fn n_out(&self) -> usize {
        self.weights.dims()[0]
    }

    pub fn n_in(&self) -> usize {
        self.weights.dims()[1]
    }
}

fn check_input<T: Scalar>(x: &Tensor<T>, layer: &FcLayer<T>) -> Result<(usize, usize, usize)> {
    let xd = x.dims();
    if xd.len() != 2 || xd[1] != layer.n_in() {
        return Err(Error::Shape(format!(
            "fc input shape {:?} does not match layer [n_in = {}]",
            xd,
            layer.n_in()
        )));
    }
    Ok((xd[0], layer.n_in(), layer.n_out()))
}

pub fn fc_forward<T: Scalar>(x: &Tensor<T>, layer: &FcLayer<T>) -> Result<Tensor<T>> {
    let (n, n_in, n_out) = check_input(x, layer)?;
    let mut out = vec![T::ZERO; n * n_out];
    let w = layer.weights.data();
    for r in 0..n {
        let row = &x.data()[r * n_in..(r + 1) * n_in];
        for o in 0..n_out {
            let mut acc = layer.bias.data()[o];
            let wrow = &w[o * n_in..(o + 1) * n_in];
            for i in 0..n_in {
                acc += row[i] * wrow[i];
            }
            out[r * n_out + o] = acc;
        }
    }
    Tensor::from_vec(&[n, n_out], out)
}

/// Backward pass; returns `(grad_x, grad_weights, grad_bias)`.
pub fn fc_backward<T: Scalar>(
    x: &Tensor<T>,
    layer: &FcLayer<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (n, n_in, n_out) = check_input(x, layer)?;
    if grad_out.dims() != [n, n_out] {
        return Err(Error::Shape(format!(
            "fc grad_out shape {:?} does not match [{n}, {n_out}]",
            grad_out.dims()
        )));
    }
    let w = layer.weights.data();
    let go = grad_out.data();

    let mut grad_x = vec![T::ZERO; n * n_in];
    for r in 0..n {
        let gx_row = &mut grad_x[r * n_in..(r + 1) * n_in];
        for o in 0..n_out {
            let g = go[r * n_out + o];
            let wrow = &w[o * n_in..(o + 1) * n_in];
            for i in 0..n_in {
                gx_row[i] += g * wrow[i];
            }
        }
    }

    let mut grad_w = vec![T::ZERO; n_out * n_in];
    for r in 0..n {
        let xrow = &x.data()[r * n_in..(r + 1) * n_in];
        for o in 0..n_out {
            let g = go[r * n_out + o];
            let gw_row = &mut grad_w[o * n_in..(o + 1) * n_in];
            for i in 0..n_in {
                gw_row[i] += g * xrow[i];
            }
        }
    }

    let mut grad_b = vec![T::ZERO; n_out];
    for r in 0..n {
        for o in 0..n_out {
            grad_b[o] += go[r * n_out + o];
        }
    }

    Ok((
        Tensor::from_vec(&[n, n_in], grad_x)?,
        Tensor::from_vec(&[n_out, n_in], grad_w)?,
        Tensor::from_vec(&[n_out], grad_b)?,
    ))
}
