//! The hierarchical attention network: construction, inference with
//! attention capture, backpropagation and weight files.

mod config;
mod han;
mod weights;

pub(crate) use config::parse_value;
pub use config::{HanConfig, HAN_CONFIG_KEYS};
pub use han::{
    argmax, backward, backward_into, eval_loss, forward, predict, AttentionMap, Encoder, GradBundle, HanModel, Level,
    Prediction, StepResult,
};
pub use weights::{
    decode_weights, encode_weights, load_weights, load_weights_expecting, save_weights, WEIGHTS_MAGIC, WEIGHTS_VERSION,
};
