//! Softmax cross-entropy loss.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Softmax probabilities of one logit row, computed in `f64` with the
/// max-subtraction trick.
pub fn softmax_row<T: Scalar>(row: &[T]) -> Vec<f64> {
    let max = row_max(row);
    let mut exps: Vec<f64> = row.iter().map(|v| libm::exp(v.to_f64() - max)).collect();
    let sum: f64 = exps.iter().sum();
    for e in exps.iter_mut() {
        *e /= sum;
    }
    exps
}

fn row_max<T: Scalar>(row: &[T]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for v in row {
        let v = v.to_f64();
        if v > max {
            max = v;
        }
    }
    max
}

/// Mean cross-entropy over the batch plus the logit gradient
/// `(softmax - onehot) / N`.
///
/// The per-row cost is evaluated as `(max - logit_label) + ln(sum exp)` in
/// `f64`, which stays finite for every finite logit row even when the
/// label's probability underflows.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Tensor<T>,
    labels: &[usize],
) -> Result<(f64, Tensor<T>)> {
    let ld = logits.dims();
    if ld.len() != 2 {
        return Err(Error::Shape(format!("logits must be [N, C], got {ld:?}")));
    }
    let (n, c) = (ld[0], ld[1]);
    if labels.len() != n {
        return Err(Error::Shape(format!(
            "got {} labels for {} logit rows",
            labels.len(),
            n
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
        return Err(Error::Data(format!("label {bad} out of range for {c} classes")));
    }

    let mut grad = vec![T::ZERO; n * c];
    let mut loss_sum = 0.0f64;
    for r in 0..n {
        let row = &logits.data()[r * c..(r + 1) * c];
        let max = row_max(row);
        let exps: Vec<f64> = row.iter().map(|v| libm::exp(v.to_f64() - max)).collect();
        let sum: f64 = exps.iter().sum();
        loss_sum += (max - row[labels[r]].to_f64()) + libm::log(sum);
        for (i, &e) in exps.iter().enumerate() {
            let onehot = if i == labels[r] { 1.0 } else { 0.0 };
            grad[r * c + i] = T::from_f64((e / sum - onehot) / n as f64);
        }
    }
    let loss = loss_sum / n as f64;
    Ok((loss, Tensor::from_vec(&[n, c], grad)?))
}
