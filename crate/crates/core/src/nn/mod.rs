//! Neural layers with explicit forward and backward passes.
//!
//! Gradients are hand-derived per layer; there is no general autodiff
//! engine. [`model_forward`] caches everything [`model_backward`] needs,
//! including the dropout masks (backward never resamples).

pub mod conv;
pub mod layers;
pub mod loss;
pub mod model;

pub use conv::{cheb_conv_backward, cheb_conv_forward, ChebConvCache, ChebConvGrads, ChebConvParams};
pub use layers::{
    dense_backward, dense_forward, dropout_backward, dropout_forward, gap_backward, gap_forward,
    relu_backward, relu_forward, DenseParams,
};
pub use loss::{add_l2_gradients, l2_penalty, softmax_cross_entropy};
pub use model::{
    init_model, model_backward, model_forward, ForwardTrace, Gradients, Mode, Model, ModelConfig,
    ParamKind, ParamMut, ParamRef,
};
