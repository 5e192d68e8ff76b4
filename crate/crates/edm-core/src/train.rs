//! SGD training loop and evaluation over in-memory samples.
//!
//! The loop is deterministic end to end: the model initializes from
//! `Rng(seed)`, epoch `e` shuffles batches with `seed ^ e`, and the
//! augmentation stream for epoch `e` is seeded `seed ^ e ^ AUGMENT_STREAM`
//! and consumed two draws per image in batch order.

use alloc::format;
use alloc::vec::Vec;

use crate::augment::{apply_eval_augment, apply_train_augment, AugmentPolicy, Image};
use crate::batch::make_batches;
use crate::error::{Error, Result};
use crate::layers::softmax_cross_entropy;
use crate::metrics::{confusion_from_pairs, EpochRecord, Metrics};
use crate::model::{Model, ModelConfig, Task, INPUT_CHANNELS};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Stream-separation constant for the per-epoch augmentation generator.
const AUGMENT_STREAM: u64 = 0x00AE_11F7_0000_0000;

/// Optimizer and run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub threshold: f64,
    pub task: Task,
    pub input_size: usize,
}

impl TrainConfig {
    pub fn new(task: Task, input_size: usize, epochs: usize) -> Self {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            epochs,
            seed: 42,
            threshold: 0.90,
            task,
            input_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Data(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Data(format!(
                "momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Data("batch size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Data(format!(
                "threshold must be in [0, 1], got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Decoded image with its class id.
#[derive(Debug, Clone)]
pub struct Sample {
    pub image: Image,
    pub label: usize,
}

/// One momentum-SGD update of a single parameter tensor:
/// `v <- momentum * v - lr * g; p <- p + v`.
pub fn sgd_update<T: Scalar>(
    param: &mut Tensor<T>,
    grad: &Tensor<T>,
    velocity: &mut Tensor<T>,
    learning_rate: f64,
    momentum: f64,
) -> Result<()> {
    if param.dims() != grad.dims() || param.dims() != velocity.dims() {
        return Err(Error::Shape(format!(
            "sgd shapes disagree: param {:?}, grad {:?}, velocity {:?}",
            param.dims(),
            grad.dims(),
            velocity.dims()
        )));
    }
    let lr = T::from_f64(learning_rate);
    let mu = T::from_f64(momentum);
    for ((p, &g), v) in param
        .data_mut()
        .iter_mut()
        .zip(grad.data())
        .zip(velocity.data_mut())
    {
        *v = mu * *v - lr * g;
        *p += *v;
    }
    Ok(())
}

/// Applies [`sgd_update`] across a whole parameter set.
pub fn sgd_step<T: Scalar>(
    model: &mut Model<T>,
    grads: &[Tensor<T>],
    velocity: &mut [Tensor<T>],
    learning_rate: f64,
    momentum: f64,
) -> Result<()> {
    let mut params = model.parameters_mut();
    if grads.len() != params.len() || velocity.len() != params.len() {
        return Err(Error::Shape(format!(
            "sgd expects {} gradient/velocity tensors, got {}/{}",
            params.len(),
            grads.len(),
            velocity.len()
        )));
    }
    for ((param, grad), vel) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        sgd_update(param, grad, vel, learning_rate, momentum)?;
    }
    Ok(())
}

fn zero_velocity<T: Scalar>(model: &Model<T>) -> Vec<Tensor<T>> {
    model.parameters().iter().map(|p| Tensor::zeros(p.dims())).collect()
}

fn batch_tensor<T: Scalar>(tensors: &[Tensor<T>], input_size: usize) -> Result<Tensor<T>> {
    let per = INPUT_CHANNELS * input_size * input_size;
    let mut data = Vec::with_capacity(tensors.len() * per);
    for t in tensors {
        data.extend_from_slice(t.data());
    }
    Tensor::from_vec(&[tensors.len(), INPUT_CHANNELS, input_size, input_size], data)
}

/// Trains a freshly initialized model of the given architecture.
///
/// `on_epoch` fires after each epoch with the 1-based epoch number, mean
/// train loss, and test accuracy. Returns the final model and metrics
/// (final test confusion/accuracy/loss plus the full history).
pub fn train_with_progress<F>(
    arch: &ModelConfig,
    config: &TrainConfig,
    train_samples: &[Sample],
    test_samples: &[Sample],
    mut on_epoch: F,
) -> Result<(Model<f32>, Metrics)>
where
    F: FnMut(usize, &EpochRecord),
{
    config.validate()?;
    arch.validate()?;
    if train_samples.is_empty() || test_samples.is_empty() {
        return Err(Error::Data(format!(
            "training requires non-empty train and test sets, got {}/{}",
            train_samples.len(),
            test_samples.len()
        )));
    }
    check_labels(arch, train_samples)?;
    check_labels(arch, test_samples)?;

    let mut init_rng = Rng::new(config.seed);
    let mut model = Model::<f32>::init(arch, &mut init_rng)?;
    let mut velocity = zero_velocity(&model);
    let policy = AugmentPolicy::for_size(config.input_size);
    policy.validate()?;

    let mut history = Vec::with_capacity(config.epochs);
    let indices: Vec<usize> = (0..train_samples.len()).collect();
    for epoch in 0..config.epochs {
        let batches = make_batches(&indices, config.batch_size, config.seed ^ epoch as u64, true);
        let mut augment_rng = Rng::new(config.seed ^ epoch as u64 ^ AUGMENT_STREAM);
        let mut loss_sum = 0.0f64;
        let mut seen = 0usize;
        for (batch_no, batch) in batches.iter().enumerate() {
            let mut inputs = Vec::with_capacity(batch.len());
            let mut labels = Vec::with_capacity(batch.len());
            for &idx in batch {
                let sample = &train_samples[idx];
                inputs.push(apply_train_augment::<f32>(&sample.image, &policy, &mut augment_rng)?);
                labels.push(sample.label);
            }
            let x = batch_tensor(&inputs, config.input_size)?;
            let logits = model.forward_training(&x)?;
            let (loss, grad_logits) = softmax_cross_entropy(&logits, &labels)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss at epoch {}, batch {}",
                    epoch + 1,
                    batch_no + 1
                )));
            }
            loss_sum += loss * batch.len() as f64;
            seen += batch.len();
            let grads = model.backward(&grad_logits)?;
            sgd_step(&mut model, &grads, &mut velocity, config.learning_rate, config.momentum)?;
        }
        let eval = evaluate(&model, test_samples)?;
        let record = EpochRecord {
            train_loss: loss_sum / seen as f64,
            test_accuracy: eval.accuracy,
        };
        history.push(record);
        on_epoch(epoch + 1, &record);
    }

    let mut metrics = evaluate(&model, test_samples)?;
    metrics.history = history;
    Ok((model, metrics))
}

/// [`train_with_progress`] without a progress callback.
pub fn train(
    arch: &ModelConfig,
    config: &TrainConfig,
    train_samples: &[Sample],
    test_samples: &[Sample],
) -> Result<(Model<f32>, Metrics)> {
    train_with_progress(arch, config, train_samples, test_samples, |_, _| {})
}

fn check_labels(arch: &ModelConfig, samples: &[Sample]) -> Result<()> {
    let classes = arch.num_classes();
    for sample in samples {
        if sample.label >= classes {
            return Err(Error::Data(format!(
                "label {} out of range for {} classes",
                sample.label, classes
            )));
        }
    }
    Ok(())
}

/// Evaluation batch size; any value gives the same predictions, this one
/// just bounds activation memory.
const EVAL_BATCH: usize = 32;

/// Runs the deterministic augment path and fills accuracy, confusion, and
/// mean loss. Prediction is the argmax of the logits; ties go to the
/// lowest class id.
pub fn evaluate(model: &Model<f32>, samples: &[Sample]) -> Result<Metrics> {
    if samples.is_empty() {
        return Err(Error::Data("evaluation requires at least one sample".into()));
    }
    check_labels(&model.config, samples)?;
    let input_size = model.config.input_size;
    let mut pairs = Vec::with_capacity(samples.len());
    let mut loss_sum = 0.0f64;
    for chunk in samples.chunks(EVAL_BATCH) {
        let mut inputs = Vec::with_capacity(chunk.len());
        let mut labels = Vec::with_capacity(chunk.len());
        for sample in chunk {
            inputs.push(apply_eval_augment::<f32>(&sample.image, input_size)?);
            labels.push(sample.label);
        }
        let x = batch_tensor(&inputs, input_size)?;
        let logits = model.forward(&x)?;
        let (loss, _) = softmax_cross_entropy(&logits, &labels)?;
        loss_sum += loss * chunk.len() as f64;
        let classes = model.config.num_classes();
        for (row, &label) in labels.iter().enumerate() {
            let logit_row = &logits.data()[row * classes..(row + 1) * classes];
            pairs.push((label, argmax(logit_row)));
        }
    }
    let confusion = confusion_from_pairs(model.config.num_classes(), &pairs);
    Ok(Metrics::from_confusion(confusion, loss_sum / samples.len() as f64))
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_no_momentum_zero_grad_is_identity() {
        let mut p = Tensor::filled(&[2], 1.5f32);
        let before = p.clone();
        let g = Tensor::<f32>::zeros(&[2]);
        let mut v = Tensor::<f32>::zeros(&[2]);
        sgd_update(&mut p, &g, &mut v, 0.1, 0.0).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn sgd_scalar_arithmetic() {
        let mut p = Tensor::filled(&[1], 1.0f32);
        let g = Tensor::filled(&[1], 0.5f32);
        let mut v = Tensor::<f32>::zeros(&[1]);
        sgd_update(&mut p, &g, &mut v, 0.1, 0.0).unwrap();
        assert!((p.data()[0] - 0.95).abs() < 1e-7);
    }

    #[test]
    fn sgd_momentum_two_step_recurrence() {
        // Hand-iterated: v1 = -0.1, p1 = -0.1; v2 = -0.19, p2 = -0.29.
        let mut p = Tensor::<f64>::zeros(&[1]);
        let g = Tensor::filled(&[1], 1.0f64);
        let mut v = Tensor::<f64>::zeros(&[1]);
        sgd_update(&mut p, &g, &mut v, 0.1, 0.9).unwrap();
        assert!((v.data()[0] + 0.1).abs() < 1e-12);
        assert!((p.data()[0] + 0.1).abs() < 1e-12);
        sgd_update(&mut p, &g, &mut v, 0.1, 0.9).unwrap();
        assert!((v.data()[0] + 0.19).abs() < 1e-12);
        assert!((p.data()[0] + 0.29).abs() < 1e-12);
    }

    #[test]
    fn sgd_zero_learning_rate_changes_nothing() {
        let mut p = Tensor::filled(&[3], 2.0f32);
        let before = p.clone();
        let g = Tensor::filled(&[3], 1.0f32);
        let mut v = Tensor::<f32>::zeros(&[3]);
        sgd_update(&mut p, &g, &mut v, 0.0, 0.9).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn sgd_shape_mismatch_is_error() {
        let mut p = Tensor::<f32>::zeros(&[2]);
        let g = Tensor::<f32>::zeros(&[3]);
        let mut v = Tensor::<f32>::zeros(&[2]);
        assert!(matches!(
            sgd_update(&mut p, &g, &mut v, 0.1, 0.0),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn argmax_tie_breaks_low() {
        assert_eq!(argmax(&[1.0f32, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax(&[5.0f32]), 0);
    }

    #[test]
    fn train_config_validation() {
        let mut config = TrainConfig::new(Task::Multi, 64, 1);
        assert!(config.validate().is_ok());
        config.momentum = 1.0;
        assert!(config.validate().is_err());
        config.momentum = 0.9;
        config.learning_rate = 0.0;
        assert!(config.validate().is_err());
    }
}
