//! 2x2 max pooling with stride 2.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Forward pass: `[N, C, H, W] -> [N, C, H/2, W/2]` plus an argmax map.
///
/// The argmax map records, per output element, the flat index of the
/// winning input element. Ties break to the lowest linear index.
pub fn maxpool2x2_forward<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    let xd = x.dims();
    if xd.len() != 4 {
        return Err(Error::Shape(format!("pool input must be [N, C, H, W], got {xd:?}")));
    }
    let (n, c, h, w) = (xd[0], xd[1], xd[2], xd[3]);
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::Shape(format!(
            "pool requires even spatial extents, got {h}x{w}"
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![T::ZERO; n * c * oh * ow];
    let mut argmax = vec![0usize; out.len()];
    let data = x.data();
    for plane in 0..n * c {
        let base = plane * h * w;
        for i in 0..oh {
            for j in 0..ow {
                let p00 = base + (2 * i) * w + 2 * j;
                // Window scan in ascending linear index; strict comparison
                // keeps the first (lowest-index) maximum.
                let mut best_idx = p00;
                let mut best = data[p00];
                for &cand in &[p00 + 1, p00 + w, p00 + w + 1] {
                    if data[cand] > best {
                        best = data[cand];
                        best_idx = cand;
                    }
                }
                let op = plane * oh * ow + i * ow + j;
                out[op] = best;
                argmax[op] = best_idx;
            }
        }
    }
    Ok((Tensor::from_vec(&[n, c, oh, ow], out)?, argmax))
}

/// Backward pass: routes each output gradient to its argmax position.
pub fn maxpool2x2_backward<T: Scalar>(
    grad_y: &Tensor<T>,
    argmax: &[usize],
    input_dims: &[usize],
) -> Result<Tensor<T>> {
    if grad_y.len() != argmax.len() {
        return Err(Error::Shape(format!(
            "pool grad has {} elements but argmax map has {}",
            grad_y.len(),
            argmax.len()
        )));
    }
    let expected: usize = input_dims.iter().product::<usize>() / 4;
    if input_dims.len() != 4 || expected != grad_y.len() {
        return Err(Error::Shape(format!(
            "pool input dims {:?} inconsistent with grad of {} elements",
            input_dims,
            grad_y.len()
        )));
    }
    let mut grad_x = Tensor::zeros(input_dims);
    let gx = grad_x.data_mut();
    for (g, &idx) in grad_y.data().iter().zip(argmax.iter()) {
        gx[idx] += *g;
    }
    Ok(grad_x)
}
