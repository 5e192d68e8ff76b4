//! Model architecture and the forward/backward chain.
//!
//! A model is `depth` conv+ReLU blocks (each optionally followed by a 2x2
//! max pool) and one fully-connected head. The channel ramp and pooling
//! schedule are derived from `(task, input_size, depth)` so a depth search
//! can instantiate any depth from one description.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::layers::{
    conv2d_backward, conv2d_forward, fc_backward, fc_forward, maxpool2x2_backward,
    maxpool2x2_forward, relu, relu_backward, ConvLayer, FcLayer,
};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Classification task: fault-vs-normal or fault-type identification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Binary,
    Multi,
}

impl Task {
    pub fn num_classes(self) -> usize {
        match self {
            Task::Binary => 2,
            Task::Multi => 4,
        }
    }

    pub fn class_names(self) -> &'static [&'static str] {
        match self {
            Task::Binary => &["normal", "fault"],
            Task::Multi => &["layer_shift", "strings", "under_extrusion", "warping"],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Binary => "binary",
            Task::Multi => "multi",
        }
    }
}

impl core::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Task::Binary),
            "multi" => Ok(Task::Multi),
            other => Err(Error::Data(format!("unknown task '{other}' (expected binary or multi)"))),
        }
    }
}

/// Output-channel ramp; truncated to the model depth.
const CHANNEL_RAMP: [usize; 10] = [8, 16, 32, 64, 128, 128, 128, 128, 128, 128];

/// Input channels of the first conv layer (RGB).
pub const INPUT_CHANNELS: usize = 3;

/// Architecture description. `channels[i]` is the output channel count of
/// conv layer `i`; `pool_after[i]` marks layers followed by a 2x2 max pool.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub task: Task,
    pub input_size: usize,
    pub depth: usize,
    pub channels: Vec<usize>,
    pub pool_after: Vec<bool>,
    pub class_names: Vec<String>,
}

/// Number of pooling stages the standard schedule applies for a given
/// input size: halve while the side stays divisible and at least 8.
pub fn max_pools(input_size: usize) -> usize {
    let mut side = input_size;
    let mut pools = 0;
    while side % 2 == 0 && side / 2 >= 8 {
        side /= 2;
        pools += 1;
    }
    pools
}

impl ModelConfig {
    /// Standard architecture for a task: channel ramp truncated to `depth`,
    /// pooling after the first `min(depth, max_pools(input_size))` layers.
    pub fn for_task(task: Task, input_size: usize, depth: usize) -> Result<Self> {
        let pooled = max_pools(input_size).min(depth);
        let config = ModelConfig {
            task,
            input_size,
            depth,
            channels: CHANNEL_RAMP[..depth.min(CHANNEL_RAMP.len())].to_vec(),
            pool_after: (0..depth).map(|i| i < pooled).collect(),
            class_names: task.class_names().iter().map(|s| s.to_string()).collect(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=10).contains(&self.depth) {
            return Err(Error::Data(format!("depth must be in 1..=10, got {}", self.depth)));
        }
        if self.input_size < 8 {
            return Err(Error::Data(format!(
                "input_size must be at least 8, got {}",
                self.input_size
            )));
        }
        if self.channels.len() != self.depth || self.pool_after.len() != self.depth {
            return Err(Error::Data(format!(
                "channels ({}) and pool_after ({}) must both have length depth ({})",
                self.channels.len(),
                self.pool_after.len(),
                self.depth
            )));
        }
        if self.channels.iter().any(|&c| c == 0) {
            return Err(Error::Data("channel counts must be positive".into()));
        }
        if self.class_names.len() != self.task.num_classes() {
            return Err(Error::Data(format!(
                "{} task requires {} class names, got {}",
                self.task.as_str(),
                self.task.num_classes(),
                self.class_names.len()
            )));
        }
        // Walk the spatial chain: every pooled layer needs an even side,
        // and the result may not collapse below 4.
        let mut side = self.input_size;
        for (i, &pool) in self.pool_after.iter().enumerate() {
            if pool {
                if side % 2 != 0 {
                    return Err(Error::Data(format!(
                        "pool after layer {} sees odd spatial side {}",
                        i + 1,
                        side
                    )));
                }
                side /= 2;
            }
        }
        if side < 4 {
            return Err(Error::Data(format!(
                "pooling schedule reduces spatial side to {side}, below the floor of 4"
            )));
        }
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.task.num_classes()
    }

    /// Spatial side after all pooling stages.
    pub fn pooled_side(&self) -> usize {
        let pools = self.pool_after.iter().filter(|&&p| p).count();
        self.input_size >> pools
    }

    /// Flattened feature length entering the head.
    pub fn head_input_len(&self) -> usize {
        self.channels[self.depth - 1] * self.pooled_side() * self.pooled_side()
    }

    /// Total scalar parameter count (conv weights/biases plus head).
    pub fn param_count(&self) -> usize {
        let mut count = 0;
        let mut c_in = INPUT_CHANNELS;
        for &c_out in &self.channels {
            count += c_out * c_in * 9 + c_out;
            c_in = c_out;
        }
        count + self.num_classes() * self.head_input_len() + self.num_classes()
    }

    /// Serialization order of the parameter tensors.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(2 * self.depth + 2);
        for i in 1..=self.depth {
            names.push(format!("conv{i}.weight"));
            names.push(format!("conv{i}.bias"));
        }
        names.push("head.weight".to_string());
        names.push("head.bias".to_string());
        names
    }
}

#[derive(Debug)]
struct LayerCache<T> {
    input: Tensor<T>,
    preact: Tensor<T>,
    /// `(argmax, pooled-input dims)` when the layer is followed by a pool.
    pool: Option<(Vec<usize>, Vec<usize>)>,
}

#[derive(Debug)]
struct ForwardCache<T> {
    layers: Vec<LayerCache<T>>,
    head_input: Tensor<T>,
}

/// Instantiated model: weights plus (in training mode) cached activations.
#[derive(Debug)]
pub struct Model<T = f32> {
    pub config: ModelConfig,
    pub conv_layers: Vec<ConvLayer<T>>,
    pub head: FcLayer<T>,
    cache: Option<ForwardCache<T>>,
}

impl<T: Scalar> Model<T> {
    /// Initializes weights Kaiming-uniform (`±sqrt(6 / fan_in)`) from the
    /// given generator; biases start at zero. Draw order is fixed: each
    /// layer's weight tensor in row-major order, layers first, head last.
    pub fn init(config: &ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let mut conv_layers = Vec::with_capacity(config.depth);
        let mut c_in = INPUT_CHANNELS;
        for &c_out in &config.channels {
            let weights = init_uniform(&[c_out, c_in, 3, 3], c_in * 9, rng);
            conv_layers.push(ConvLayer::new(weights, Tensor::zeros(&[c_out]))?);
            c_in = c_out;
        }
        let n_in = config.head_input_len();
        let n_out = config.num_classes();
        let head = FcLayer::new(init_uniform(&[n_out, n_in], n_in, rng), Tensor::zeros(&[n_out]))?;
        Ok(Model {
            config: config.clone(),
            conv_layers,
            head,
            cache: None,
        })
    }

    pub fn from_parts(config: ModelConfig, conv_layers: Vec<ConvLayer<T>>, head: FcLayer<T>) -> Result<Self> {
        config.validate()?;
        if conv_layers.len() != config.depth {
            return Err(Error::Shape(format!(
                "model depth {} but {} conv layers supplied",
                config.depth,
                conv_layers.len()
            )));
        }
        let model = Model {
            config,
            conv_layers,
            head,
            cache: None,
        };
        model.check_chain()?;
        Ok(model)
    }

    fn check_chain(&self) -> Result<()> {
        let mut c_in = INPUT_CHANNELS;
        for (i, layer) in self.conv_layers.iter().enumerate() {
            if layer.in_channels() != c_in || layer.out_channels() != self.config.channels[i] {
                return Err(Error::Shape(format!(
                    "conv{} has shape {:?}, expected [{}, {}, 3, 3]",
                    i + 1,
                    layer.weights.dims(),
                    self.config.channels[i],
                    c_in
                )));
            }
            c_in = layer.out_channels();
        }
        if self.head.n_in() != self.config.head_input_len()
            || self.head.n_out() != self.config.num_classes()
        {
            return Err(Error::Shape(format!(
                "head has shape {:?}, expected [{}, {}]",
                self.head.weights.dims(),
                self.config.num_classes(),
                self.config.head_input_len()
            )));
        }
        Ok(())
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<usize> {
        let xd = x.dims();
        let s = self.config.input_size;
        if xd.len() != 4 || xd[1] != INPUT_CHANNELS || xd[2] != s || xd[3] != s {
            return Err(Error::Shape(format!(
                "model input must be [N, {INPUT_CHANNELS}, {s}, {s}], got {xd:?}"
            )));
        }
        Ok(xd[0])
    }

    /// Inference forward pass: a pure function of (weights, input).
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let n = self.check_input(x)?;
        let mut activation = x.clone();
        for (layer, &pool) in self.conv_layers.iter().zip(&self.config.pool_after) {
            let preact = conv2d_forward(&activation, layer)?;
            let mut act = relu(&preact);
            if pool {
                act = maxpool2x2_forward(&act)?.0;
            }
            activation = act;
        }
        let head_input = activation.reshape(&[n, self.config.head_input_len()])?;
        fc_forward(&head_input, &self.head)
    }

    /// Training forward pass: same chain, but caches per-layer activations
    /// for the subsequent [`Model::backward`] call.
    pub fn forward_training(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let n = self.check_input(x)?;
        let mut layers = Vec::with_capacity(self.conv_layers.len());
        let mut activation = x.clone();
        for (layer, &pool) in self.conv_layers.iter().zip(&self.config.pool_after) {
            let preact = conv2d_forward(&activation, layer)?;
            let mut act = relu(&preact);
            let mut pool_cache = None;
            if pool {
                let pre_pool_dims = act.dims().to_vec();
                let (pooled, argmax) = maxpool2x2_forward(&act)?;
                pool_cache = Some((argmax, pre_pool_dims));
                act = pooled;
            }
            layers.push(LayerCache {
                input: activation,
                preact,
                pool: pool_cache,
            });
            activation = act;
        }
        let head_input = activation.reshape(&[n, self.config.head_input_len()])?;
        let logits = fc_forward(&head_input, &self.head)?;
        self.cache = Some(ForwardCache { layers, head_input });
        Ok(logits)
    }

    /// Backward pass through the cached chain. Returns one gradient tensor
    /// per parameter tensor, in [`ModelConfig::param_names`] order.
    pub fn backward(&mut self, grad_logits: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        let cache = self.cache.take().ok_or_else(|| {
            Error::State("backward called without a prior training-mode forward".into())
        })?;
        let (grad_head_input, grad_head_w, grad_head_b) =
            fc_backward(&cache.head_input, &self.head, grad_logits)?;

        let mut grads_rev: Vec<Tensor<T>> = alloc::vec![grad_head_b, grad_head_w];
        let last = cache
            .layers
            .last()
            .map(|lc| match &lc.pool {
                Some((_, dims)) => {
                    let mut d = dims.clone();
                    d[2] /= 2;
                    d[3] /= 2;
                    d
                }
                None => lc.preact.dims().to_vec(),
            })
            .expect("model has at least one conv layer");
        let mut grad = grad_head_input.reshape(&last)?;

        for (layer, lc) in self.conv_layers.iter().zip(cache.layers.iter()).rev() {
            if let Some((argmax, pre_pool_dims)) = &lc.pool {
                grad = maxpool2x2_backward(&grad, argmax, pre_pool_dims)?;
            }
            let grad_preact = relu_backward(&lc.preact, &grad);
            let (grad_input, grad_w, grad_b) = conv2d_backward(&lc.input, layer, &grad_preact)?;
            grads_rev.push(grad_b);
            grads_rev.push(grad_w);
            grad = grad_input;
        }
        grads_rev.reverse();
        Ok(grads_rev)
    }

    /// Parameter tensors in [`ModelConfig::param_names`] order.
    pub fn parameters(&self) -> Vec<&Tensor<T>> {
        let mut params = Vec::with_capacity(2 * self.conv_layers.len() + 2);
        for layer in &self.conv_layers {
            params.push(&layer.weights);
            params.push(&layer.bias);
        }
        params.push(&self.head.weights);
        params.push(&self.head.bias);
        params
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut params = Vec::with_capacity(2 * self.conv_layers.len() + 2);
        for layer in &mut self.conv_layers {
            params.push(&mut layer.weights);
            params.push(&mut layer.bias);
        }
        params.push(&mut self.head.weights);
        params.push(&mut self.head.bias);
        params
    }

    /// Copy of the model without its training cache.
    pub fn clone_weights(&self) -> Model<T> {
        Model {
            config: self.config.clone(),
            conv_layers: self.conv_layers.clone(),
            head: self.head.clone(),
            cache: None,
        }
    }

    /// Copy of the model at another precision (weights only, no cache).
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        Model {
            config: self.config.clone(),
            conv_layers: self
                .conv_layers
                .iter()
                .map(|l| ConvLayer {
                    weights: l.weights.cast(),
                    bias: l.bias.cast(),
                })
                .collect(),
            head: FcLayer {
                weights: self.head.weights.cast(),
                bias: self.head.bias.cast(),
            },
            cache: None,
        }
    }
}

fn init_uniform<T: Scalar>(dims: &[usize], fan_in: usize, rng: &mut Rng) -> Tensor<T> {
    let bound = libm::sqrt(6.0 / fan_in as f64);
    let mut t = Tensor::zeros(dims);
    for v in t.data_mut() {
        *v = T::from_f64((rng.next_uniform() * 2.0 - 1.0) * bound);
    }
    t
}
