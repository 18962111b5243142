//! Limit Transformers: parameters, fixed-precision forward pass,
//! serialization and the R∞ complexity metric.

mod fixed;
mod forward;
mod matrix;
mod net;
mod reg;
mod serial;

pub use fixed::{round_fixed, FixedPrecision, DEFAULT_PRECISION, MAX_PRECISION};
pub use forward::{
    accepts_ids, accepts_net, attention_weights, encode_input, encode_word, forward, forward_final,
    forward_ids, predicted_sets_net, ActivationTensor, ForwardFlags, EXP_LIMIT,
};
pub use matrix::Matrix;
pub use net::{
    Activation, Head, Layer, LimitTransformer, Mlp, PeriodicEncoding, PositionalLogitFn,
};
pub use reg::{reg_infinity, RegBreakdown};
pub use serial::{deserialize, dyadic_parse, dyadic_string, serialize, FORMAT_NAME, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("non-finite value")]
    NonFinite,
    #[error("precision {0} outside 1..={MAX_PRECISION}")]
    InvalidPrecision(u32),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}
