//! Model weight container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "3DEM" | version u32 = 1 | header_len u32 | header JSON (UTF-8)
//! | tensor_count u32
//! | per tensor: name_len u32, name, ndim u32, dims u32 each,
//!               IEEE-754 f32 values, row-major
//! ```
//!
//! The header is compact JSON with alphabetically sorted keys, and tensors
//! follow the fixed naming order `conv{i}.weight`, `conv{i}.bias`,
//! `head.weight`, `head.bias`, so save -> load -> save reproduces files
//! byte for byte.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use edm_core::layers::{ConvLayer, FcLayer};
use edm_core::model::{Model, ModelConfig, Task};
use edm_core::tensor::Tensor;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"3DEM";
pub const VERSION: u32 = 1;

/// Header payload; field order is alphabetical so serde emits sorted keys.
#[derive(Debug, Serialize, Deserialize)]
struct Header {
    channels: Vec<usize>,
    class_names: Vec<String>,
    depth: usize,
    input_size: usize,
    pool_after: Vec<bool>,
    task: String,
}

impl Header {
    fn from_config(config: &ModelConfig) -> Self {
        Header {
            channels: config.channels.clone(),
            class_names: config.class_names.clone(),
            depth: config.depth,
            input_size: config.input_size,
            pool_after: config.pool_after.clone(),
            task: config.task.as_str().to_string(),
        }
    }

    fn into_config(self) -> Result<ModelConfig> {
        let task: Task = self
            .task
            .parse()
            .map_err(|e: edm_core::Error| Error::Corruption(e.to_string()))?;
        let config = ModelConfig {
            task,
            input_size: self.input_size,
            depth: self.depth,
            channels: self.channels,
            pool_after: self.pool_after,
            class_names: self.class_names,
        };
        config
            .validate()
            .map_err(|e| Error::Corruption(format!("inconsistent header: {e}")))?;
        Ok(config)
    }
}

/// Serializes a model into the container layout.
pub fn encode_model(model: &Model<f32>) -> Vec<u8> {
    let header = serde_json::to_string(&Header::from_config(&model.config))
        .expect("header serialization cannot fail");
    let names = model.config.param_names();
    let params = model.parameters();

    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for (name, tensor) in names.iter().zip(params) {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(tensor.dims().len() as u32).to_le_bytes());
        for &d in tensor.dims() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Writes the container to a sink; returns the byte count.
pub fn save_model<W: Write>(model: &Model<f32>, sink: &mut W) -> std::io::Result<u64> {
    let bytes = encode_model(model);
    sink.write_all(&bytes)?;
    Ok(bytes.len() as u64)
}

pub fn save_model_file(model: &Model<f32>, path: &Path) -> Result<u64> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let count = save_model(model, &mut file).map_err(|e| Error::io(path, e))?;
    Ok(count)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Corruption(format!(
                "truncated file while reading {what} (need {n} bytes at offset {})",
                self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Reconstructs a model, validating magic, version, header consistency,
/// and the declared tensor names/shapes against the header before any
/// payload buffer is allocated.
pub fn load_model_bytes(bytes: &[u8]) -> Result<Model<f32>> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format(format!(
            "not a model file: bad magic {magic:02x?}"
        )));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::Unsupported(format!(
            "model file version {version}; this build reads version {VERSION}"
        )));
    }
    let header_len = r.u32("header length")? as usize;
    let header_bytes = r.take(header_len, "header")?;
    let header: Header = serde_json::from_slice(header_bytes)
        .map_err(|e| Error::Format(format!("malformed header JSON: {e}")))?;
    let config = header.into_config()?;

    let expected_names = config.param_names();
    let tensor_count = r.u32("tensor count")? as usize;
    if tensor_count != expected_names.len() {
        let detail = if tensor_count < expected_names.len() {
            format!("; first missing tensor: {}", expected_names[tensor_count])
        } else {
            String::new()
        };
        return Err(Error::Corruption(format!(
            "header depth {} implies {} tensors, file declares {tensor_count}{detail}",
            config.depth,
            expected_names.len()
        )));
    }

    let expected_dims = expected_shapes(&config);
    let mut tensors = Vec::with_capacity(tensor_count);
    for (name, dims) in expected_names.iter().zip(&expected_dims) {
        let name_len = r.u32("tensor name length")? as usize;
        let actual_name = r.take(name_len, "tensor name")?;
        if actual_name != name.as_bytes() {
            return Err(Error::Corruption(format!(
                "expected tensor {name}, found {:?}",
                String::from_utf8_lossy(actual_name)
            )));
        }
        let ndim = r.u32("tensor rank")? as usize;
        if ndim != dims.len() {
            return Err(Error::Corruption(format!(
                "tensor {name}: rank {ndim}, expected {}",
                dims.len()
            )));
        }
        let mut actual_dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            actual_dims.push(r.u32("tensor dim")? as usize);
        }
        if &actual_dims != dims {
            return Err(Error::Corruption(format!(
                "tensor {name}: dims {actual_dims:?}, expected {dims:?}"
            )));
        }
        let count: u64 = dims.iter().map(|&d| d as u64).product();
        let byte_len = count
            .checked_mul(4)
            .filter(|&b| b <= r.remaining() as u64)
            .ok_or_else(|| {
                Error::Corruption(format!(
                    "tensor {name}: declared {count} values exceed remaining file length"
                ))
            })?;
        let raw = r.take(byte_len as usize, "tensor values")?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        tensors.push(Tensor::from_vec(dims, data).map_err(|e| Error::Corruption(e.to_string()))?);
    }
    if r.remaining() != 0 {
        return Err(Error::Corruption(format!(
            "{} trailing bytes after the last tensor",
            r.remaining()
        )));
    }

    // Tensor order is conv1.weight, conv1.bias, ..., head.weight, head.bias.
    let mut iter = tensors.into_iter();
    let mut conv_layers = Vec::with_capacity(config.depth);
    for _ in 0..config.depth {
        let weights = iter.next().expect("counted above");
        let bias = iter.next().expect("counted above");
        conv_layers.push(ConvLayer::new(weights, bias).map_err(Error::Core)?);
    }
    let head = FcLayer::new(
        iter.next().expect("counted above"),
        iter.next().expect("counted above"),
    )
    .map_err(Error::Core)?;
    Model::from_parts(config, conv_layers, head).map_err(Error::Core)
}

pub fn load_model_file(path: &Path) -> Result<Model<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    load_model_bytes(&bytes)
}

fn expected_shapes(config: &ModelConfig) -> Vec<Vec<usize>> {
    let mut shapes = Vec::with_capacity(2 * config.depth + 2);
    let mut c_in = edm_core::model::INPUT_CHANNELS;
    for &c_out in &config.channels {
        shapes.push(vec![c_out, c_in, 3, 3]);
        shapes.push(vec![c_out]);
        c_in = c_out;
    }
    shapes.push(vec![config.num_classes(), config.head_input_len()]);
    shapes.push(vec![config.num_classes()]);
    shapes
}

#[cfg(test)]
mod tests {
    use super::*;
    use edm_core::rng::Rng;

    fn test_model() -> Model<f32> {
        let config = ModelConfig::for_task(Task::Multi, 16, 2).unwrap();
        Model::<f32>::init(&config, &mut Rng::new(99)).unwrap()
    }

    fn param_bits(model: &Model<f32>) -> Vec<u32> {
        model
            .parameters()
            .iter()
            .flat_map(|t| t.data().iter().map(|v| v.to_bits()))
            .collect()
    }

    #[test]
    fn roundtrip_preserves_every_bit() {
        let model = test_model();
        let bytes = encode_model(&model);
        let loaded = load_model_bytes(&bytes).unwrap();
        assert_eq!(param_bits(&model), param_bits(&loaded));
        assert_eq!(loaded.config, model.config);
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let model = test_model();
        let first = encode_model(&model);
        let second = encode_model(&load_model_bytes(&first).unwrap());
        assert_eq!(first, second);
    }

    #[test]
    fn file_starts_with_magic() {
        let bytes = encode_model(&test_model());
        assert_eq!(&bytes[..4], &[0x33, 0x44, 0x45, 0x4D]);
    }

    #[test]
    fn tensor_count_is_2d_plus_2() {
        for depth in [1usize, 3] {
            let config = ModelConfig::for_task(Task::Binary, 16, depth).unwrap();
            let model = Model::<f32>::init(&config, &mut Rng::new(0)).unwrap();
            let bytes = encode_model(&model);
            // tensor_count sits right after magic, version, header.
            let header_len =
                u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
            let at = 12 + header_len;
            let count = u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]);
            assert_eq!(count as usize, 2 * depth + 2);
        }
    }

    #[test]
    fn bad_magic_is_format_error() {
        let mut bytes = encode_model(&test_model());
        bytes[0] = b'X';
        assert!(matches!(load_model_bytes(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn wrong_version_is_unsupported() {
        let mut bytes = encode_model(&test_model());
        bytes[4] = 2;
        assert!(matches!(load_model_bytes(&bytes), Err(Error::Unsupported(_))));
    }

    #[test]
    fn truncation_is_corruption() {
        let bytes = encode_model(&test_model());
        let cut = &bytes[..bytes.len() - 5];
        assert!(matches!(load_model_bytes(cut), Err(Error::Corruption(_))));
    }

    #[test]
    fn missing_tensors_name_the_first_missing() {
        let model = test_model();
        let names = model.config.param_names();
        let bytes = encode_model(&model);
        let header_len = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
        let at = 12 + header_len;
        let mut bytes = bytes;
        // Claim fewer tensors than the depth implies.
        bytes[at..at + 4].copy_from_slice(&4u32.to_le_bytes());
        match load_model_bytes(&bytes) {
            Err(Error::Corruption(msg)) => assert!(msg.contains(&names[4]), "{msg}"),
            other => panic!("expected corruption error, got {other:?}"),
        }
    }

    #[test]
    fn loaded_model_predicts_identically() {
        let model = test_model();
        let loaded = load_model_bytes(&encode_model(&model)).unwrap();
        let mut x = edm_core::tensor::Tensor::<f32>::zeros(&[1, 3, 16, 16]);
        for (i, v) in x.data_mut().iter_mut().enumerate() {
            *v = (i % 97) as f32 / 96.0;
        }
        let a = model.forward(&x).unwrap();
        let b = loaded.forward(&x).unwrap();
        let bits = |t: &Tensor<f32>| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }
}
