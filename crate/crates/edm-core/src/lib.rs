//! Core math for a lightweight convolutional fault-detection model.
//!
//! This crate holds everything that runs in memory: the dense [`Tensor`]
//! type, a seeded [`Rng`], the layer forward/backward kernels, the model
//! assembly, the image augmentation pipeline, the SGD training loop, and
//! the depth-pruning search. File formats, dataset scanning, and the CLI
//! live in the companion `edm-cli` crate.
//!
//! The crate is `no_std` (with `alloc`). All floating-point transcendentals
//! go through `libm`, so results are bit-stable across platforms.
//!
//! Determinism is a design contract throughout: every stochastic operation
//! takes an explicit [`Rng`], summation orders are fixed, and two runs with
//! the same seed and inputs produce bitwise-identical weights.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod augment;
pub mod batch;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod search;
pub mod tensor;
pub mod train;

pub use augment::{AugmentPolicy, Image};
pub use error::{Error, Result};
pub use metrics::Metrics;
pub use model::{Model, ModelConfig, Task};
pub use rng::Rng;
pub use scalar::Scalar;
pub use search::{DepthRecord, SearchReport};
pub use tensor::Tensor;
pub use train::{Sample, TrainConfig};
