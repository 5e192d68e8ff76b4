//! File formats, dataset handling, and synthetic fixtures for the
//! fault-detection model. The `edm` binary in this crate exposes training,
//! depth search, evaluation, prediction, and dataset inspection.

pub mod dataset;
pub mod error;
pub mod formats;
pub mod synth;

pub use error::{Error, Result};
