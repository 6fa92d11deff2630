//! Differentiable layer primitives with hand-written backward passes.
//!
//! Every `*_forward` function has a matching `*_backward` that accumulates
//! parameter gradients into a congruent container (same type, zero-initialized
//! via [`ParamSet::zeros_like`]) and returns the gradient with respect to the
//! layer input.

mod adam;
mod attention;
mod conv;
mod dense;
mod dropout;
mod gradcheck;
mod loss;
mod lstm;
mod params;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use attention::{attention_backward, attention_pool, AttentionOutput, AttentionParams};
pub use conv::{conv1d_backward, conv1d_forward, Conv1dParams};
pub use dense::{dense_backward, dense_forward, relu, relu_backward, DenseParams};
pub use dropout::{dropout, dropout_backward, DropoutOutput};
pub use gradcheck::{gradient_check, GradCheckConfig, GradCheckReport};
pub use loss::{softmax, softmax_cross_entropy, CrossEntropy};
pub use lstm::{lstm_backward, lstm_forward, Gate, LstmCache, LstmInputGrads, LstmParams};
pub(crate) use params::prefixed;
pub use params::ParamSet;
pub(crate) use tensor::ensure_finite;
pub use tensor::Tensor2;
