//! Finite-difference gradient verification.
//!
//! These helpers are the independent side of every backward-pass check:
//! they only ever call forward code. Run them in `f64` (the 64-bit mode of
//! [`Tensor`]); `f32` quantization drowns the comparison.

use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Central finite difference of a scalar-valued function at `point`:
/// `g[i] = (f(point + eps*e_i) - f(point - eps*e_i)) / (2*eps)`.
pub fn central_diff<T, F>(point: &Tensor<T>, eps: f64, mut f: F) -> Tensor<T>
where
    T: Scalar,
    F: FnMut(&Tensor<T>) -> f64,
{
    let mut work = point.clone();
    let mut grad = Tensor::zeros(point.dims());
    let step = T::from_f64(eps);
    for i in 0..point.len() {
        let orig = work.data()[i];
        work.data_mut()[i] = orig + step;
        let plus = f(&work);
        work.data_mut()[i] = orig - step;
        let minus = f(&work);
        work.data_mut()[i] = orig;
        grad.data_mut()[i] = T::from_f64((plus - minus) / (2.0 * eps));
    }
    grad
}

/// Largest elementwise relative error between two gradients:
/// `|a - b| / max(|a|, |b|, floor)` with a small floor so near-zero
/// entries compare absolutely.
pub fn max_rel_error<T: Scalar>(analytic: &Tensor<T>, numeric: &Tensor<T>) -> f64 {
    assert_eq!(analytic.dims(), numeric.dims(), "gradient shape mismatch");
    const FLOOR: f64 = 1e-6;
    let mut worst = 0.0f64;
    for (a, b) in analytic.data().iter().zip(numeric.data()) {
        let (a, b) = (a.to_f64(), b.to_f64());
        let scale = libm::fabs(a).max(libm::fabs(b)).max(FLOOR);
        let err = libm::fabs(a - b) / scale;
        if err > worst {
            worst = err;
        }
    }
    worst
}
