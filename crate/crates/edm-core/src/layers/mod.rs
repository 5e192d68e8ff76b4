//! Network building blocks: each with a forward pass and a hand-written
//! backward pass. No autodiff graph; the model chains these explicitly.

mod activation;
mod conv;
mod fc;
mod loss;
mod pool;

pub use activation::{relu, relu_backward};
pub use conv::{conv2d_backward, conv2d_forward, ConvLayer};
pub use fc::{fc_backward, fc_forward, FcLayer};
pub use loss::{softmax_cross_entropy, softmax_row};
pub use pool::{maxpool2x2_backward, maxpool2x2_forward};
