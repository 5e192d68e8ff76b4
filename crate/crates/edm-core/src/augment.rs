//! Image preprocessing: resize, center crop, flips, normalization.
//!
//! The training path is resize -> center crop -> maybe-flip-h ->
//! maybe-flip-v -> normalize; evaluation uses the same path with both flip
//! probabilities forced to zero. Exactly two uniform draws are consumed per
//! training image whether or not a flip fires, so the random stream stays
//! aligned regardless of outcomes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// 8-bit RGB image, interleaved samples in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

pub const IMAGE_CHANNELS: usize = 3;

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Data(format!("image extents must be positive, got {width}x{height}")));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(IMAGE_CHANNELS))
            .ok_or_else(|| Error::Data(format!("image {width}x{height} overflows")))?;
        if pixels.len() != expected {
            return Err(Error::Data(format!(
                "image {width}x{height} needs {expected} samples, got {}",
                pixels.len()
            )));
        }
        Ok(Image { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let base = (y * self.width + x) * IMAGE_CHANNELS;
        [self.pixels[base], self.pixels[base + 1], self.pixels[base + 2]]
    }
}

/// Augmentation parameters; flips apply during training only.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentPolicy {
    pub target_size: usize,
    pub hflip_prob: f64,
    pub vflip_prob: f64,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        AugmentPolicy {
            target_size: 256,
            hflip_prob: 0.5,
            vflip_prob: 0.5,
        }
    }
}

impl AugmentPolicy {
    pub fn for_size(target_size: usize) -> Self {
        AugmentPolicy {
            target_size,
            ..AugmentPolicy::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_size < 8 {
            return Err(Error::Data(format!(
                "augment target size must be at least 8, got {}",
                self.target_size
            )));
        }
        for (name, p) in [("hflip_prob", self.hflip_prob), ("vflip_prob", self.vflip_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Data(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// Scales so the shorter side equals `target`, preserving aspect ratio
/// (the longer side rounds to nearest, minimum 1).
///
/// Bilinear interpolation with the align-centers convention: the source
/// coordinate of destination pixel `d` is `(d + 0.5) * scale - 0.5`,
/// clamped to the valid range, sampled per channel, and rounded half-up
/// back to 8 bits.
pub fn resize_shorter_side(img: &Image, target: usize) -> Image {
    assert!(target >= 1, "resize target must be at least 1");
    let (w, h) = (img.width, img.height);
    let (new_w, new_h) = if w <= h {
        (target, scaled_extent(h, w, target))
    } else {
        (scaled_extent(w, h, target), target)
    };
    if new_w == w && new_h == h {
        return img.clone();
    }

    let scale_x = w as f64 / new_w as f64;
    let scale_y = h as f64 / new_h as f64;
    let mut out = vec![0u8; new_w * new_h * IMAGE_CHANNELS];
    for dy in 0..new_h {
        let sy = clamp((dy as f64 + 0.5) * scale_y - 0.5, 0.0, (h - 1) as f64);
        let y0 = sy as usize;
        let y1 = (y0 + 1).min(h - 1);
        let fy = sy - y0 as f64;
        for dx in 0..new_w {
            let sx = clamp((dx as f64 + 0.5) * scale_x - 0.5, 0.0, (w - 1) as f64);
            let x0 = sx as usize;
            let x1 = (x0 + 1).min(w - 1);
            let fx = sx - x0 as f64;
            let dst = (dy * new_w + dx) * IMAGE_CHANNELS;
            for c in 0..IMAGE_CHANNELS {
                let p00 = img.pixels[(y0 * w + x0) * IMAGE_CHANNELS + c] as f64;
                let p01 = img.pixels[(y0 * w + x1) * IMAGE_CHANNELS + c] as f64;
                let p10 = img.pixels[(y1 * w + x0) * IMAGE_CHANNELS + c] as f64;
                let p11 = img.pixels[(y1 * w + x1) * IMAGE_CHANNELS + c] as f64;
                let top = p00 + (p01 - p00) * fx;
                let bottom = p10 + (p11 - p10) * fx;
                let v = top + (bottom - top) * fy;
                out[dst + c] = round_half_up(v);
            }
        }
    }
    Image {
        width: new_w,
        height: new_h,
        pixels: out,
    }
}

fn scaled_extent(longer: usize, shorter: usize, target: usize) -> usize {
    let scaled = longer as f64 * target as f64 / shorter as f64;
    libm::round(scaled).max(1.0) as usize
}

fn clamp(v: f64, lo: f64, hi: f64) -> f64 {
    if v < lo {
        lo
    } else if v > hi {
        hi
    } else {
        v
    }
}

fn round_half_up(v: f64) -> u8 {
    let r = libm::floor(v + 0.5);
    if r <= 0.0 {
        0
    } else if r >= 255.0 {
        255
    } else {
        r as u8
    }
}

/// Pixel-exact copy of the centered `size`x`size` region.
pub fn center_crop(img: &Image, size: usize) -> Result<Image> {
    if img.width < size || img.height < size {
        return Err(Error::Data(format!(
            "cannot crop {size}x{size} from {}x{} image",
            img.width, img.height
        )));
    }
    let off_x = (img.width - size) / 2;
    let off_y = (img.height - size) / 2;
    let mut out = Vec::with_capacity(size * size * IMAGE_CHANNELS);
    for y in 0..size {
        let src = ((off_y + y) * img.width + off_x) * IMAGE_CHANNELS;
        out.extend_from_slice(&img.pixels[src..src + size * IMAGE_CHANNELS]);
    }
    Image::new(size, size, out)
}

/// Mirror across the vertical axis (left-right swap).
pub fn flip_h(img: &Image) -> Image {
    let (w, h) = (img.width, img.height);
    let mut out = vec![0u8; img.pixels.len()];
    for y in 0..h {
        for x in 0..w {
            let src = (y * w + x) * IMAGE_CHANNELS;
            let dst = (y * w + (w - 1 - x)) * IMAGE_CHANNELS;
            out[dst..dst + IMAGE_CHANNELS].copy_from_slice(&img.pixels[src..src + IMAGE_CHANNELS]);
        }
    }
    Image {
        width: w,
        height: h,
        pixels: out,
    }
}

/// Mirror across the horizontal axis (top-bottom swap).
pub fn flip_v(img: &Image) -> Image {
    let (w, h) = (img.width, img.height);
    let mut out = vec![0u8; img.pixels.len()];
    let stride = w * IMAGE_CHANNELS;
    for y in 0..h {
        let src = y * stride;
        let dst = (h - 1 - y) * stride;
        out[dst..dst + stride].copy_from_slice(&img.pixels[src..src + stride]);
    }
    Image {
        width: w,
        height: h,
        pixels: out,
    }
}

/// Converts a square image to a channel-planar `[3, S, S]` tensor with
/// samples scaled into `[0, 1]` by division by 255.
pub fn to_input_tensor<T: Scalar>(img: &Image) -> Result<Tensor<T>> {
    if img.width != img.height {
        return Err(Error::Shape(format!(
            "model input must be square, got {}x{}",
            img.width, img.height
        )));
    }
    let s = img.width;
    let mut data = vec![T::ZERO; IMAGE_CHANNELS * s * s];
    for y in 0..s {
        for x in 0..s {
            let src = (y * s + x) * IMAGE_CHANNELS;
            for c in 0..IMAGE_CHANNELS {
                data[c * s * s + y * s + x] = T::from_f64(img.pixels[src + c] as f64 / 255.0);
            }
        }
    }
    Tensor::from_vec(&[IMAGE_CHANNELS, s, s], data)
}

/// Full training path. Always consumes exactly two uniform draws.
pub fn apply_train_augment<T: Scalar>(
    img: &Image,
    policy: &AugmentPolicy,
    rng: &mut Rng,
) -> Result<Tensor<T>> {
    let resized = resize_shorter_side(img, policy.target_size);
    let mut cropped = center_crop(&resized, policy.target_size)?;
    let flip_h_draw = rng.next_uniform();
    let flip_v_draw = rng.next_uniform();
    if flip_h_draw < policy.hflip_prob {
        cropped = flip_h(&cropped);
    }
    if flip_v_draw < policy.vflip_prob {
        cropped = flip_v(&cropped);
    }
    to_input_tensor(&cropped)
}

/// Deterministic evaluation path: resize, crop, normalize. No flips.
pub fn apply_eval_augment<T: Scalar>(img: &Image, target_size: usize) -> Result<Tensor<T>> {
    let resized = resize_shorter_side(img, target_size);
    let cropped = center_crop(&resized, target_size)?;
    to_input_tensor(&cropped)
}
