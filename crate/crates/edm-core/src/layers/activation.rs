//! ReLU activation.

use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let mut y = x.clone();
    for v in y.data_mut() {
        if *v < T::ZERO {
            *v = T::ZERO;
        }
    }
    y
}

/// Gradient of ReLU; the derivative at exactly 0 is defined as 0.
pub fn relu_backward<T: Scalar>(x: &Tensor<T>, grad_y: &Tensor<T>) -> Tensor<T> {
    assert_eq!(x.dims(), grad_y.dims(), "relu_backward shape mismatch");
    let mut gx = grad_y.clone();
    for (g, &v) in gx.data_mut().iter_mut().zip(x.data()) {
        if v <= T::ZERO {
            *g = T::ZERO;
        }
    }
    gx
}
