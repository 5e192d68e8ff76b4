//! Seeded synthetic texture datasets for tests and demos.
//!
//! Four base classes — horizontal stripes, vertical stripes, checkerboard,
//! solid — rendered in grayscale with random band phase and intensity, then
//! 5% of pixels replaced with uniform random colors.

use std::fs;
use std::path::Path;

use edm_core::augment::Image;
use edm_core::model::Task;
use edm_core::rng::Rng;
use edm_core::train::Sample;

use crate::error::{Error, Result};
use crate::formats::ppm::encode_ppm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Texture {
    HorizontalStripes,
    VerticalStripes,
    Checkerboard,
    Solid,
    /// Extra pattern for `normal/` directories in binary-task trees.
    DiagonalStripes,
}

/// The four classes of the multi task, in class-id order.
pub const TEXTURES: [Texture; 4] = [
    Texture::HorizontalStripes,
    Texture::VerticalStripes,
    Texture::Checkerboard,
    Texture::Solid,
];

const BAND: usize = 8;
const NOISE_RATE: f64 = 0.05;

/// Renders one texture sample. Draw order per image: dark level, light
/// level, solid level, phase, then one draw per pixel (plus three more
/// for each pixel that turns into noise).
pub fn texture_image(texture: Texture, size: usize, rng: &mut Rng) -> Image {
    let dark = (rng.next_uniform() * 60.0) as u8;
    let light = 196 + (rng.next_uniform() * 60.0) as u8;
    let solid_level = (rng.next_uniform() * 256.0) as u8;
    let phase = (rng.next_uniform() * (2 * BAND) as f64) as usize;

    let mut pixels = Vec::with_capacity(size * size * 3);
    for y in 0..size {
        for x in 0..size {
            let level = match texture {
                Texture::HorizontalStripes => band_level(y + phase, dark, light),
                Texture::VerticalStripes => band_level(x + phase, dark, light),
                Texture::Checkerboard => {
                    if ((x + phase) / BAND + (y + phase) / BAND) % 2 == 0 {
                        dark
                    } else {
                        light
                    }
                }
                Texture::Solid => solid_level,
                Texture::DiagonalStripes => band_level(x + y + phase, dark, light),
            };
            pixels.extend_from_slice(&[level, level, level]);
        }
    }
    for p in 0..size * size {
        if rng.next_uniform() < NOISE_RATE {
            for c in 0..3 {
                pixels[p * 3 + c] = (rng.next_uniform() * 256.0) as u8;
            }
        }
    }
    Image::new(size, size, pixels).expect("generated dimensions are valid")
}

fn band_level(coord: usize, dark: u8, light: u8) -> u8 {
    if (coord / BAND) % 2 == 0 {
        dark
    } else {
        light
    }
}

/// In-memory dataset: `per_class` images for each of the four texture
/// classes, labels in [`TEXTURES`] order.
pub fn synthetic_samples(size: usize, per_class: usize, seed: u64) -> Vec<Sample> {
    let mut rng = Rng::new(seed);
    let mut samples = Vec::with_capacity(4 * per_class);
    for (label, &texture) in TEXTURES.iter().enumerate() {
        for _ in 0..per_class {
            samples.push(Sample {
                image: texture_image(texture, size, &mut rng),
                label,
            });
        }
    }
    samples
}

/// Writes a dataset tree of PPM files under `root` in the directory layout
/// the scanner expects. Multi-task trees hold the four texture classes;
/// binary-task trees add a `normal/` directory of diagonal stripes.
/// Each directory renders from `Rng(seed ^ dir_index)`.
pub fn write_synthetic_tree(
    root: &Path,
    task: Task,
    size: usize,
    per_class: usize,
    seed: u64,
) -> Result<()> {
    let assignment: Vec<(&str, Texture)> = match task {
        Task::Multi => vec![
            ("layer_shift", Texture::HorizontalStripes),
            ("strings", Texture::VerticalStripes),
            ("under_extrusion", Texture::Checkerboard),
            ("warping", Texture::Solid),
        ],
        Task::Binary => vec![
            ("normal", Texture::DiagonalStripes),
            ("layer_shift", Texture::HorizontalStripes),
            ("strings", Texture::VerticalStripes),
            ("under_extrusion", Texture::Checkerboard),
            ("warping", Texture::Solid),
        ],
    };
    for (idx, (dir, texture)) in assignment.iter().enumerate() {
        let dir_path = root.join(dir);
        fs::create_dir_all(&dir_path).map_err(|e| Error::io(&dir_path, e))?;
        let mut rng = Rng::new(seed ^ idx as u64);
        for i in 0..per_class {
            let img = texture_image(*texture, size, &mut rng);
            let file = dir_path.join(format!("img_{i:04}.ppm"));
            fs::write(&file, encode_ppm(&img)).map_err(|e| Error::io(&file, e))?;
        }
    }
    Ok(())
}
