//! Same-size 3x3 convolution (stride 1, zero padding 1).
//!
//! The forward pass lowers each image to a column matrix (im2col) and runs
//! one matrix product per image. Column rows are ordered `(c, di, dj)`
//! ascending, so every output element accumulates its terms in exactly the
//! order of the naive definition
//! `out[n][o][i][j] = bias[o] + sum_{c,di,dj} w[o][c][di][dj] * x_pad[n][c][i+di][j+dj]`.

use alloc::format;
use alloc::vec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{matmul_into, Tensor};

pub const KERNEL: usize = 3;
const PAD: usize = 1;

/// 3x3 convolution layer: weights `[C_out, C_in, 3, 3]`, bias `[C_out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T = f32> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> ConvLayer<T> {
    pub fn new(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let wd = weights.dims();
        if wd.len() != 4 || wd[2] != KERNEL || wd[3] != KERNEL {
            return Err(Error::Shape(format!(
                "conv weights must be [C_out, C_in, 3, 3], got {wd:?}"
            )));
        }
        if bias.dims() != [wd[0]] {
            return Err(Error::Shape(format!(
                "conv bias must be [{}], got {:?}",
                wd[0],
                bias.dims()
            )));
        }
        Ok(ConvLayer { weights, bias })
    }

    pub fn out_channels(&self) -> usize {
        self.weights.dims()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weights.dims()[1]
    }
}

fn check_input<T: Scalar>(x: &Tensor<T>, layer: &ConvLayer<T>) -> Result<(usize, usize, usize, usize)> {
    let xd = x.dims();
    if xd.len() != 4 {
        return Err(Error::Shape(format!("conv input must be [N, C, H, W], got {xd:?}")));
    }
    if xd[1] != layer.in_channels() {
        return Err(Error::Shape(format!(
            "conv channel mismatch: input has {} channels, layer expects {}",
            xd[1],
            layer.in_channels()
        )));
    }
    Ok((xd[0], xd[1], xd[2], xd[3]))
}

/// Fills `col` (`[C_in * 9, H * W]` row-major) with the padded receptive
/// fields of one image (`x_img` is `[C_in, H, W]` flat).
fn im2col<T: Scalar>(x_img: &[T], c_in: usize, h: usize, w: usize, col: &mut [T]) {
    let hw = h * w;
    debug_assert_eq!(col.len(), c_in * KERNEL * KERNEL * hw);
    let mut row = 0;
    for c in 0..c_in {
        let plane = &x_img[c * hw..(c + 1) * hw];
        for di in 0..KERNEL {
            for dj in 0..KERNEL {
                let dst = &mut col[row * hw..(row + 1) * hw];
                for i in 0..h {
                    let src_i = i + di;
                    let dst_row = &mut dst[i * w..(i + 1) * w];
                    if src_i < PAD || src_i >= h + PAD {
                        for v in dst_row.iter_mut() {
                            *v = T::ZERO;
                        }
                        continue;
                    }
                    let src_i = src_i - PAD;
                    for (j, v) in dst_row.iter_mut().enumerate() {
                        let src_j = j + dj;
                        *v = if src_j < PAD || src_j >= w + PAD {
                            T::ZERO
                        } else {
                            plane[src_i * w + (src_j - PAD)]
                        };
                    }
                }
                row += 1;
            }
        }
    }
}

/// Scatter-adds a column matrix back into image layout (transpose of
/// `im2col`); used for the input gradient.
fn col2im_add<T: Scalar>(col: &[T], c_in: usize, h: usize, w: usize, x_img: &mut [T]) {
    let hw = h * w;
    let mut row = 0;
    for c in 0..c_in {
        let plane = &mut x_img[c * hw..(c + 1) * hw];
        for di in 0..KERNEL {
            for dj in 0..KERNEL {
                let src = &col[row * hw..(row + 1) * hw];
                for i in 0..h {
                    let src_i = i + di;
                    if src_i < PAD || src_i >= h + PAD {
                        continue;
                    }
                    let src_i = src_i - PAD;
                    for j in 0..w {
                        let src_j = j + dj;
                        if src_j < PAD || src_j >= w + PAD {
                            continue;
                        }
                        plane[src_i * w + (src_j - PAD)] += src[i * w + j];
                    }
                }
                row += 1;
            }
        }
    }
}

/// Forward pass: `[N, C_in, H, W] -> [N, C_out, H, W]`.
pub fn conv2d_forward<T: Scalar>(x: &Tensor<T>, layer: &ConvLayer<T>) -> Result<Tensor<T>> {
    let (n, c_in, h, w) = check_input(x, layer)?;
    let c_out = layer.out_channels();
    let hw = h * w;
    let k = c_in * KERNEL * KERNEL;

    let mut out = vec![T::ZERO; n * c_out * hw];
    let mut col = vec![T::ZERO; k * hw];
    for img in 0..n {
        im2col(&x.data()[img * c_in * hw..(img + 1) * c_in * hw], c_in, h, w, &mut col);
        let out_img = &mut out[img * c_out * hw..(img + 1) * c_out * hw];
        for o in 0..c_out {
            let b = layer.bias.data()[o];
            for v in out_img[o * hw..(o + 1) * hw].iter_mut() {
                *v = b;
            }
        }
        matmul_into(layer.weights.data(), &col, out_img, c_out, k, hw);
    }
    Tensor::from_vec(&[n, c_out, h, w], out)
}

/// Backward pass; returns `(grad_x, grad_weights, grad_bias)`.
pub fn conv2d_backward<T: Scalar>(
    x: &Tensor<T>,
    layer: &ConvLayer<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (n, c_in, h, w) = check_input(x, layer)?;
    let c_out = layer.out_channels();
    if grad_out.dims() != [n, c_out, h, w] {
        return Err(Error::Shape(format!(
            "conv grad_out shape {:?} does not match forward output [{n}, {c_out}, {h}, {w}]",
            grad_out.dims()
        )));
    }
    let hw = h * w;
    let k = c_in * KERNEL * KERNEL;

    // grad_bias[o] = sum over n, i, j of grad_out.
    let mut grad_b = vec![T::ZERO; c_out];
    for img in 0..n {
        for o in 0..c_out {
            let go = &grad_out.data()[(img * c_out + o) * hw..(img * c_out + o + 1) * hw];
            let acc = &mut grad_b[o];
            for &g in go {
                *acc += g;
            }
        }
    }

    // Weight transpose [K, C_out] for the input-gradient product.
    let mut w_t = vec![T::ZERO; k * c_out];
    for o in 0..c_out {
        for t in 0..k {
            w_t[t * c_out + o] = layer.weights.data()[o * k + t];
        }
    }

    let mut grad_w = vec![T::ZERO; c_out * k];
    let mut grad_x = vec![T::ZERO; n * c_in * hw];
    let mut col = vec![T::ZERO; k * hw];
    let mut col_t = vec![T::ZERO; hw * k];
    let mut grad_col = vec![T::ZERO; k * hw];
    for img in 0..n {
        im2col(&x.data()[img * c_in * hw..(img + 1) * c_in * hw], c_in, h, w, &mut col);
        for t in 0..k {
            for p in 0..hw {
                col_t[p * k + t] = col[t * hw + p];
            }
        }
        let go_img = &grad_out.data()[img * c_out * hw..(img + 1) * c_out * hw];
        // grad_w += grad_out_img [C_out, HW] x col^T [HW, K], image-ascending.
        matmul_into(go_img, &col_t, &mut grad_w, c_out, hw, k);
        // grad_col = W^T [K, C_out] x grad_out_img [C_out, HW].
        for v in grad_col.iter_mut() {
            *v = T::ZERO;
        }
        matmul_into(&w_t, go_img, &mut grad_col, k, c_out, hw);
        col2im_add(&grad_col, c_in, h, w, &mut grad_x[img * c_in * hw..(img + 1) * c_in * hw]);
    }

    Ok((
        Tensor::from_vec(&[n, c_in, h, w], grad_x)?,
        Tensor::from_vec(&[c_out, c_in, KERNEL, KERNEL], grad_w)?,
        Tensor::from_vec(&[c_out], grad_b)?,
    ))
}
