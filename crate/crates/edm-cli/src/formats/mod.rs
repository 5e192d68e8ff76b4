//! On-disk formats: PPM images (the bit-exact reference format) and the
//! model weight container.

pub mod model_file;
pub mod ppm;

pub use model_file::{encode_model, load_model_bytes, load_model_file, save_model, save_model_file};
pub use ppm::{decode_ppm, encode_ppm};
