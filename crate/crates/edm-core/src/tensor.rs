//! Dense row-major tensor and the matrix product every layer builds on.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense n-dimensional array, row-major, with `f32` as the default element.
///
/// Invariants: `dims` is non-empty, every extent is at least 1, and
/// `dims.iter().product() == data.len()`. Constructors enforce this.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T = f32> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(dims: &[usize]) -> Self {
        let len = checked_len(dims).expect("tensor dims must be non-empty with positive extents");
        Tensor {
            dims: dims.to_vec(),
            data: vec![T::ZERO; len],
        }
    }

    pub fn filled(dims: &[usize], value: T) -> Self {
        let len = checked_len(dims).expect("tensor dims must be non-empty with positive extents");
        Tensor {
            dims: dims.to_vec(),
            data: vec![value; len],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<T>) -> Result<Self> {
        let len = checked_len(dims)
            .ok_or_else(|| Error::Shape(format!("invalid tensor dims {dims:?}")))?;
        if len != data.len() {
            return Err(Error::Shape(format!(
                "dims {:?} expect {} elements, got {}",
                dims,
                len,
                data.len()
            )));
        }
        Ok(Tensor {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Reinterprets the flat data under new dims of equal element count.
    pub fn reshape(mut self, dims: &[usize]) -> Result<Self> {
        let len = checked_len(dims)
            .ok_or_else(|| Error::Shape(format!("invalid tensor dims {dims:?}")))?;
        if len != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} ({} elements) to {:?} ({} elements)",
                self.dims,
                self.data.len(),
                dims,
                len
            )));
        }
        self.dims = dims.to_vec();
        Ok(self)
    }

    /// Converts elementwise to another scalar type through `f64`.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

fn checked_len(dims: &[usize]) -> Option<usize> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return None;
    }
    dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
}

/// Matrix product of `a: [m, k]` and `b: [k, n]`.
///
/// Each output element accumulates its `k` terms in ascending order, so the
/// result is bitwise deterministic.
pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if a.dims().len() != 2 || b.dims().len() != 2 || a.dims()[1] != b.dims()[0] {
        return Err(Error::Shape(format!(
            "matmul shape mismatch: {:?} x {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let (m, k) = (a.dims()[0], a.dims()[1]);
    let n = b.dims()[1];
    let mut out = vec![T::ZERO; m * n];
    matmul_into(a.data(), b.data(), &mut out, m, k, n);
    Tensor::from_vec(&[m, n], out)
}

/// `out[m, n] += a[m, k] * b[k, n]` over flat row-major slices.
///
/// The `i, t, j` loop order keeps per-element accumulation in ascending `t`
/// while letting the inner loop vectorize.
pub(crate) fn matmul_into<T: Scalar>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        for t in 0..k {
            let aval = a[i * k + t];
            let b_row = &b[t * n..(t + 1) * n];
            for j in 0..n {
                out_row[j] += aval * b_row[j];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn matmul_identity() {
        let i2 = Tensor::from_vec(&[2, 2], vec![1.0f32, 0.0, 0.0, 1.0]).unwrap();
        let a = Tensor::from_vec(&[2, 2], vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let out = matmul(&i2, &a).unwrap();
        assert_eq!(out.data(), a.data());
    }

    #[test]
    fn matmul_two_by_two() {
        let a = Tensor::from_vec(&[2, 2], vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::from_vec(&[2, 2], vec![5.0f32, 6.0, 7.0, 8.0]).unwrap();
        let out = matmul(&a, &b).unwrap();
        // Independent triple-loop evaluation.
        let mut expect = [0.0f32; 4];
        for i in 0..2 {
            for j in 0..2 {
                for t in 0..2 {
                    expect[i * 2 + j] += a.data()[i * 2 + t] * b.data()[t * 2 + j];
                }
            }
        }
        assert_eq!(out.data(), &expect);
        assert_eq!(out.data(), &[19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn matmul_zeros_annihilate() {
        let z = Tensor::<f32>::zeros(&[3, 4]);
        let b = Tensor::filled(&[4, 2], 7.5f32);
        let out = matmul(&z, &b).unwrap();
        assert_eq!(out.dims(), &[3, 2]);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = Tensor::<f32>::zeros(&[2, 3]);
        let b = Tensor::<f32>::zeros(&[4, 2]);
        let err = matmul(&a, &b).unwrap_err();
        let msg = alloc::format!("{err}");
        assert!(msg.contains("[2, 3]") && msg.contains("[4, 2]"), "{msg}");
    }

    #[test]
    fn reshape_preserves_data() {
        let t = Tensor::from_vec(&[2, 3], vec![1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let r = t.clone().reshape(&[3, 2]).unwrap();
        assert_eq!(r.data(), t.data());
        assert!(t.clone().reshape(&[4, 2]).is_err());
    }

    #[test]
    fn from_vec_rejects_bad_dims() {
        assert!(Tensor::from_vec(&[2, 0], vec![0.0f32; 0]).is_err());
        assert!(Tensor::<f32>::from_vec(&[], vec![]).is_err());
        assert!(Tensor::from_vec(&[2, 2], vec![0.0f32; 3]).is_err());
    }
}
