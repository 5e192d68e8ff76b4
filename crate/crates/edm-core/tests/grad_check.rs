//! Finite-difference verification of every backward pass, in f64.
//!
//! Each check builds a scalar objective from the forward pass alone,
//! differentiates it numerically with `gradcheck::central_diff`, and
//! compares against the analytic backward output. Inputs are drawn away
//! from ReLU zeros and pooling ties so the objective is smooth at the
//! evaluation point.

use edm_core::gradcheck::{central_diff, max_rel_error};
use edm_core::layers::{
    conv2d_backward, conv2d_forward, fc_backward, fc_forward, maxpool2x2_backward,
    maxpool2x2_forward, relu, relu_backward, softmax_cross_entropy, ConvLayer, FcLayer,
};
use edm_core::model::{Model, ModelConfig, Task};
use edm_core::rng::Rng;
use edm_core::tensor::Tensor;

const EPS: f64 = 1e-5;
const LAYER_TOL: f64 = 1e-4;
const MODEL_TOL: f64 = 1e-3;

fn random_tensor(dims: &[usize], rng: &mut Rng, lo: f64, hi: f64) -> Tensor<f64> {
    let len: usize = dims.iter().product();
    let data: Vec<f64> = (0..len).map(|_| lo + rng.next_uniform() * (hi - lo)).collect();
    Tensor::from_vec(dims, data).unwrap()
}

/// Weighted sum of all elements; a generic scalar objective whose gradient
/// with respect to the output is exactly `weights`.
fn weighted_sum(t: &Tensor<f64>, weights: &Tensor<f64>) -> f64 {
    t.data().iter().zip(weights.data()).map(|(a, b)| a * b).sum()
}

#[test]
fn conv_gradients_match_finite_differences() {
    let mut rng = Rng::new(101);
    let x = random_tensor(&[1, 2, 5, 5], &mut rng, -1.0, 1.0);
    let w = random_tensor(&[3, 2, 3, 3], &mut rng, -0.5, 0.5);
    let b = random_tensor(&[3], &mut rng, -0.5, 0.5);
    let layer = ConvLayer::new(w.clone(), b.clone()).unwrap();
    let out_weights = random_tensor(&[1, 3, 5, 5], &mut rng, -1.0, 1.0);

    let (grad_x, grad_w, grad_b) = conv2d_backward(&x, &layer, &out_weights).unwrap();

    let fd_x = central_diff(&x, EPS, |t| {
        weighted_sum(&conv2d_forward(t, &layer).unwrap(), &out_weights)
    });
    assert!(max_rel_error(&grad_x, &fd_x) < LAYER_TOL);

    let fd_w = central_diff(&w, EPS, |t| {
        let layer = ConvLayer::new(t.clone(), b.clone()).unwrap();
        weighted_sum(&conv2d_forward(&x, &layer).unwrap(), &out_weights)
    });
    assert!(max_rel_error(&grad_w, &fd_w) < LAYER_TOL);

    let fd_b = central_diff(&b, EPS, |t| {
        let layer = ConvLayer::new(w.clone(), t.clone()).unwrap();
        weighted_sum(&conv2d_forward(&x, &layer).unwrap(), &out_weights)
    });
    assert!(max_rel_error(&grad_b, &fd_b) < LAYER_TOL);
}

#[test]
fn pool_gradient_matches_finite_differences() {
    let mut rng = Rng::new(202);
    // Distinct continuous draws keep window maxima unique with margin far
    // above the finite-difference step.
    let x = random_tensor(&[1, 2, 4, 4], &mut rng, 0.0, 1.0);
    let out_weights = random_tensor(&[1, 2, 2, 2], &mut rng, -1.0, 1.0);

    let (_, argmax) = maxpool2x2_forward(&x).unwrap();
    let grad_x = maxpool2x2_backward(&out_weights, &argmax, x.dims()).unwrap();

    let fd_x = central_diff(&x, EPS, |t| {
        weighted_sum(&maxpool2x2_forward(t).unwrap().0, &out_weights)
    });
    assert!(max_rel_error(&grad_x, &fd_x) < LAYER_TOL);
}

#[test]
fn relu_gradient_matches_finite_differences() {
    let mut rng = Rng::new(303);
    // Magnitudes at least 0.1, mixed signs: far from the kink at zero.
    let mut x = random_tensor(&[40], &mut rng, 0.1, 1.1);
    for (i, v) in x.data_mut().iter_mut().enumerate() {
        if i % 2 == 0 {
            *v = -*v;
        }
    }
    let out_weights = random_tensor(&[40], &mut rng, -1.0, 1.0);

    let grad_x = relu_backward(&x, &out_weights);
    let fd_x = central_diff(&x, EPS, |t| weighted_sum(&relu(t), &out_weights));
    assert!(max_rel_error(&grad_x, &fd_x) < LAYER_TOL);
}

#[test]
fn fc_gradients_match_finite_differences() {
    let mut rng = Rng::new(404);
    let x = random_tensor(&[3, 6], &mut rng, -1.0, 1.0);
    let w = random_tensor(&[4, 6], &mut rng, -0.5, 0.5);
    let b = random_tensor(&[4], &mut rng, -0.5, 0.5);
    let layer = FcLayer::new(w.clone(), b.clone()).unwrap();
    let out_weights = random_tensor(&[3, 4], &mut rng, -1.0, 1.0);

    let (grad_x, grad_w, grad_b) = fc_backward(&x, &layer, &out_weights).unwrap();

    let fd_x = central_diff(&x, EPS, |t| {
        weighted_sum(&fc_forward(t, &layer).unwrap(), &out_weights)
    });
    assert!(max_rel_error(&grad_x, &fd_x) < LAYER_TOL);

    let fd_w = central_diff(&w, EPS, |t| {
        let layer = FcLayer::new(t.clone(), b.clone()).unwrap();
        weighted_sum(&fc_forward(&x, &layer).unwrap(), &out_weights)
    });
    assert!(max_rel_error(&grad_w, &fd_w) < LAYER_TOL);

    let fd_b = central_diff(&b, EPS, |t| {
        let layer = FcLayer::new(w.clone(), t.clone()).unwrap();
        weighted_sum(&fc_forward(&x, &layer).unwrap(), &out_weights)
    });
    assert!(max_rel_error(&grad_b, &fd_b) < LAYER_TOL);
}

#[test]
fn softmax_cross_entropy_gradient_matches_finite_differences() {
    let mut rng = Rng::new(505);
    let logits = random_tensor(&[3, 4], &mut rng, -2.0, 2.0);
    let labels = [1usize, 3, 0];

    let (_, grad) = softmax_cross_entropy(&logits, &labels).unwrap();
    let fd = central_diff(&logits, EPS, |t| softmax_cross_entropy(t, &labels).unwrap().0);
    assert!(max_rel_error(&grad, &fd) < LAYER_TOL);
}

#[test]
fn full_model_gradients_match_finite_differences() {
    let config = ModelConfig::for_task(Task::Multi, 16, 2).unwrap();
    let mut rng = Rng::new(606);
    let mut model = Model::<f64>::init(&config, &mut rng).unwrap();
    let x = random_tensor(&[2, 3, 16, 16], &mut rng, 0.0, 1.0);
    let labels = [2usize, 0];

    let logits = model.forward_training(&x).unwrap();
    let (_, grad_logits) = softmax_cross_entropy(&logits, &labels).unwrap();
    let analytic = model.backward(&grad_logits).unwrap();

    let names = config.param_names();
    for (p, analytic_grad) in analytic.iter().enumerate() {
        let point = model.parameters()[p].clone();
        let fd = central_diff(&point, EPS, |t| {
            let mut probe = model.clone_weights();
            *probe.parameters_mut()[p] = t.clone();
            let logits = probe.forward(&x).unwrap();
            softmax_cross_entropy(&logits, &labels).unwrap().0
        });
        let err = max_rel_error(analytic_grad, &fd);
        assert!(err < MODEL_TOL, "{}: rel error {err:.3e}", names[p]);
    }
}
