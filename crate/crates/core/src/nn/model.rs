//! Model assembly: configuration, initialization, and the composed
//! forward/backward passes.
//!
//! The architecture is a stack of Chebyshev graph convolutions, each followed
//! by ReLU (and inverted dropout on configured layers in train mode), then
//! global average pooling and a dense classifier. No pooling happens between
//! layers: every layer outputs the full node set.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, Array3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::{
    cheb_conv_backward, cheb_conv_forward, ChebConvCache, ChebConvGrads, ChebConvParams,
};
use super::layers::{
    dense_backward, dense_forward, dropout_backward, dropout_forward, gap_backward, gap_forward,
    relu_forward, DenseParams,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Architecture description: layer widths, Chebyshev order, dropout layout,
/// and input/output dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Output channels of each conv layer, in order.
    pub channels: Vec<usize>,
    /// Number of Chebyshev coefficients per conv layer (orders 0..K-1).
    pub num_coeffs: usize,
    /// Zero-based indices of conv layers followed by dropout in train mode.
    pub dropout_layers: BTreeSet<usize>,
    pub dropout_rate: f64,
    pub num_classes: usize,
    /// Feature-vector width of each node in the input.
    pub input_channels: usize,
}

impl Default for ModelConfig {
    /// Five conv layers (32, 32, 64, 64, 128), nine Chebyshev coefficients,
    /// dropout 0.5 after layers 2, 4 and 5, 55 input channels, two classes.
    fn default() -> Self {
        Self {
            channels: vec![32, 32, 64, 64, 128],
            num_coeffs: 9,
            dropout_layers: BTreeSet::from([1, 3, 4]),
            dropout_rate: 0.5,
            num_classes: 2,
            input_channels: 55,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::InvalidInput("channels must be non-empty".into()));
        }
        if self.channels.iter().any(|&c| c == 0) {
            return Err(Error::InvalidInput("channel widths must be positive".into()));
        }
        if self.num_coeffs < 1 {
            return Err(Error::InvalidInput(
                "num_coeffs must be at least 1".into(),
            ));
        }
        if let Some(&bad) = self
            .dropout_layers
            .iter()
            .find(|&&l| l >= self.channels.len())
        {
            return Err(Error::InvalidInput(format!(
                "dropout layer index {bad} exceeds layer count {}",
                self.channels.len()
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidInput(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidInput(
                "need at least two classes".into(),
            ));
        }
        if self.input_channels == 0 {
            return Err(Error::InvalidInput(
                "input_channels must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Input width of conv layer `index`.
    pub fn layer_input(&self, index: usize) -> usize {
        if index == 0 {
            self.input_channels
        } else {
            self.channels[index - 1]
        }
    }

    /// Total trainable parameter count (conv coefficients and biases, dense
    /// weights and biases).
    pub fn num_params(&self) -> usize {
        let conv: usize = (0..self.channels.len())
            .map(|l| self.layer_input(l) * self.channels[l] * self.num_coeffs + self.channels[l])
            .sum();
        let last = *self.channels.last().expect("validated non-empty");
        conv + last * self.num_classes + self.num_classes
    }
}

/// Ordered layer stack with all trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T: Scalar> {
    config: ModelConfig,
    conv_layers: Vec<ChebConvParams<T>>,
    dense: DenseParams<T>,
}

/// Forward execution mode. Train mode carries the dropout seed so a forward
/// pass is a pure function of (params, inputs, seed).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train { dropout_seed: u64 },
    Eval,
}

impl Mode {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train { .. })
    }
}

/// Whether a parameter tensor participates in L2 regularization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
}

/// Read-only view of one parameter tensor.
pub struct ParamRef<'a, T> {
    pub name: String,
    pub kind: ParamKind,
    pub shape: Vec<usize>,
    pub values: &'a [T],
}

/// Mutable view of one parameter tensor.
pub struct ParamMut<'a, T> {
    pub name: String,
    pub kind: ParamKind,
    pub values: &'a mut [T],
}

impl<T: Scalar> Model<T> {
    /// Assemble a model from explicit parts, checking that widths chain.
    pub fn new(
        config: ModelConfig,
        conv_layers: Vec<ChebConvParams<T>>,
        dense: DenseParams<T>,
    ) -> Result<Self> {
        config.validate()?;
        if conv_layers.len() != config.channels.len() {
            return Err(Error::DimensionMismatch {
                context: "model conv layers".into(),
                expected: format!("{}", config.channels.len()),
                actual: format!("{}", conv_layers.len()),
            });
        }
        for (idx, layer) in conv_layers.iter().enumerate() {
            let expected = (config.layer_input(idx), config.channels[idx], config.num_coeffs);
            let actual = (
                layer.input_channels(),
                layer.output_channels(),
                layer.num_coeffs(),
            );
            if expected != actual {
                return Err(Error::DimensionMismatch {
                    context: format!("conv layer {idx}"),
                    expected: format!("{expected:?}"),
                    actual: format!("{actual:?}"),
                });
            }
        }
        let last = *config.channels.last().expect("non-empty");
        if dense.num_features() != last || dense.num_classes() != config.num_classes {
            return Err(Error::DimensionMismatch {
                context: "dense head".into(),
                expected: format!("{last} x {}", config.num_classes),
                actual: format!("{} x {}", dense.num_features(), dense.num_classes()),
            });
        }
        Ok(Self {
            config,
            conv_layers,
            dense,
        })
    }

    /// All-zero parameters for the given architecture.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let conv_layers = (0..config.channels.len())
            .map(|l| {
                ChebConvParams::zeros(config.layer_input(l), config.channels[l], config.num_coeffs)
            })
            .collect();
        let last = *config.channels.last().expect("non-empty");
        let dense = DenseParams::zeros(last, config.num_classes);
        Self::new(config, conv_layers, dense)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn conv_layers(&self) -> &[ChebConvParams<T>] {
        &self.conv_layers
    }

    pub fn dense(&self) -> &DenseParams<T> {
        &self.dense
    }

    pub fn num_params(&self) -> usize {
        self.config.num_params()
    }

    /// Parameter tensors in a fixed traversal order (conv layers first, then
    /// the dense head). The order is the contract shared by gradients, the
    /// optimizer state, and serialization.
    pub fn param_refs(&self) -> Vec<ParamRef<'_, T>> {
        let mut out = Vec::new();
        for (idx, layer) in self.conv_layers.iter().enumerate() {
            out.push(ParamRef {
                name: format!("conv{idx}.coeffs"),
                kind: ParamKind::Weight,
                shape: layer.coeffs.shape().to_vec(),
                values: layer.coeffs.as_slice().expect("standard layout"),
            });
            out.push(ParamRef {
                name: format!("conv{idx}.bias"),
                kind: ParamKind::Bias,
                shape: vec![layer.bias.len()],
                values: layer.bias.as_slice().expect("standard layout"),
            });
        }
        out.push(ParamRef {
            name: "dense.weights".into(),
            kind: ParamKind::Weight,
            shape: self.dense.weights.shape().to_vec(),
            values: self.dense.weights.as_slice().expect("standard layout"),
        });
        out.push(ParamRef {
            name: "dense.bias".into(),
            kind: ParamKind::Bias,
            shape: vec![self.dense.bias.len()],
            values: self.dense.bias.as_slice().expect("standard layout"),
        });
        out
    }

    /// All parameters concatenated in traversal order.
    pub fn flatten_params(&self) -> Vec<T> {
        self.param_refs()
            .iter()
            .flat_map(|p| p.values.iter().copied())
            .collect()
    }

    /// Overwrite all parameters from a flat vector in traversal order.
    pub fn assign_params(&mut self, flat: &[T]) -> Result<()> {
        let total: usize = self.param_muts().iter().map(|p| p.values.len()).sum();
        if flat.len() != total {
            return Err(Error::DimensionMismatch {
                context: "assign_params".into(),
                expected: format!("{total}"),
                actual: format!("{}", flat.len()),
            });
        }
        let mut offset = 0;
        for param in self.param_muts() {
            let len = param.values.len();
            param.values.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(())
    }

    /// Mutable counterpart of [`Model::param_refs`], same order.
    pub fn param_muts(&mut self) -> Vec<ParamMut<'_, T>> {
        let mut out = Vec::new();
        for (idx, layer) in self.conv_layers.iter_mut().enumerate() {
            let ChebConvParams { coeffs, bias } = layer;
            out.push(ParamMut {
                name: format!("conv{idx}.coeffs"),
                kind: ParamKind::Weight,
                values: coeffs.as_slice_mut().expect("standard layout"),
            });
            out.push(ParamMut {
                name: format!("conv{idx}.bias"),
                kind: ParamKind::Bias,
                values: bias.as_slice_mut().expect("standard layout"),
            });
        }
        let DenseParams { weights, bias } = &mut self.dense;
        out.push(ParamMut {
            name: "dense.weights".into(),
            kind: ParamKind::Weight,
            values: weights.as_slice_mut().expect("standard layout"),
        });
        out.push(ParamMut {
            name: "dense.bias".into(),
            kind: ParamKind::Bias,
            values: bias.as_slice_mut().expect("standard layout"),
        });
        out
    }
}

/// Glorot-style uniform initialization: conv coefficients are drawn from
/// `±sqrt(6 / (f_in * K + f_out))` (fan-in counts every Chebyshev order),
/// dense weights from `±sqrt(6 / (f + c))`, all biases zero. Deterministic
/// for a fixed seed; samples are drawn as f64 and converted, so parameter
/// streams agree across scalar types up to rounding.
pub fn init_model<T: Scalar>(config: ModelConfig, seed: u64) -> Result<Model<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |bound: f64, count: usize| -> Vec<T> {
        (0..count)
            .map(|_| {
                let u: f64 = rng.random();
                T::from_f64((2.0 * u - 1.0) * bound).expect("finite sample")
            })
            .collect()
    };

    let mut conv_layers = Vec::with_capacity(config.channels.len());
    for l in 0..config.channels.len() {
        let f_in = config.layer_input(l);
        let f_out = config.channels[l];
        let k = config.num_coeffs;
        let bound = (6.0 / (f_in * k + f_out) as f64).sqrt();
        let coeffs =
            Array3::from_shape_vec((f_in, f_out, k), uniform(bound, f_in * f_out * k))
                .expect("shape matches sample count");
        conv_layers.push(ChebConvParams::new(coeffs, Array1::zeros(f_out))?);
    }

    let features = *config.channels.last().expect("non-empty");
    let classes = config.num_classes;
    let bound = (6.0 / (features + classes) as f64).sqrt();
    let weights = Array2::from_shape_vec((features, classes), uniform(bound, features * classes))
        .expect("shape matches sample count");
    let dense = DenseParams::new(weights, Array1::zeros(classes))?;

    Model::new(config, conv_layers, dense)
}

struct LayerTrace<T: Scalar> {
    conv_cache: ChebConvCache<T>,
    /// True where the post-ReLU activation is strictly positive.
    relu_mask: Array3<bool>,
    dropout_mask: Option<Array3<bool>>,
}

/// Everything cached by a forward pass: per-layer inputs and masks for the
/// backward pass, plus the final feature maps needed by class activation
/// mapping.
pub struct ForwardTrace<T: Scalar> {
    mode: Mode,
    layers: Vec<LayerTrace<T>>,
    /// Post-ReLU (and post-dropout, in train mode) maps of the final conv
    /// layer; exactly what global average pooling consumed.
    last_conv_features: Array3<T>,
    pooled: Array2<T>,
    logits: Array2<T>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn last_conv_features(&self) -> &Array3<T> {
        &self.last_conv_features
    }

    pub fn pooled(&self) -> &Array2<T> {
        &self.pooled
    }

    pub fn logits(&self) -> &Array2<T> {
        &self.logits
    }
}

/// Gradients for every trainable parameter, same shapes as [`Model`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T: Scalar> {
    pub conv: Vec<ChebConvGrads<T>>,
    pub dense_weights: Array2<T>,
    pub dense_bias: Array1<T>,
}

impl<T: Scalar> Gradients<T> {
    /// Parameter-tensor views in the same order as [`Model::param_refs`].
    pub fn param_refs(&self) -> Vec<ParamRef<'_, T>> {
        let mut out = Vec::new();
        for (idx, layer) in self.conv.iter().enumerate() {
            out.push(ParamRef {
                name: format!("conv{idx}.coeffs"),
                kind: ParamKind::Weight,
                shape: layer.coeffs.shape().to_vec(),
                values: layer.coeffs.as_slice().expect("standard layout"),
            });
            out.push(ParamRef {
                name: format!("conv{idx}.bias"),
                kind: ParamKind::Bias,
                shape: vec![layer.bias.len()],
                values: layer.bias.as_slice().expect("standard layout"),
            });
        }
        out.push(ParamRef {
            name: "dense.weights".into(),
            kind: ParamKind::Weight,
            shape: self.dense_weights.shape().to_vec(),
            values: self.dense_weights.as_slice().expect("standard layout"),
        });
        out.push(ParamRef {
            name: "dense.bias".into(),
            kind: ParamKind::Bias,
            shape: vec![self.dense_bias.len()],
            values: self.dense_bias.as_slice().expect("standard layout"),
        });
        out
    }

    pub fn is_all_zero(&self) -> bool {
        self.param_refs()
            .iter()
            .all(|p| p.values.iter().all(|&v| v == T::zero()))
    }

    /// All gradients concatenated in the model's traversal order.
    pub fn flatten(&self) -> Vec<T> {
        self.param_refs()
            .iter()
            .flat_map(|p| p.values.iter().copied())
            .collect()
    }
}

use crate::spectral::ScaledLaplacian;

/// Run the full network. Returns the logits and the trace needed by
/// [`model_backward`] and by class activation mapping.
pub fn model_forward<T: Scalar>(
    model: &Model<T>,
    scaled: &ScaledLaplacian<T>,
    batch: &Array3<T>,
    mode: Mode,
) -> Result<(Array2<T>, ForwardTrace<T>)> {
    let (_, d, f) = batch.dim();
    if d != scaled.num_nodes() || f != model.config.input_channels {
        return Err(Error::DimensionMismatch {
            context: "model_forward".into(),
            expected: format!(
                "batch x {} x {}",
                scaled.num_nodes(),
                model.config.input_channels
            ),
            actual: format!("batch x {d} x {f}"),
        });
    }

    let mut dropout_rng = match mode {
        Mode::Train { dropout_seed } => Some(ChaCha8Rng::seed_from_u64(dropout_seed)),
        Mode::Eval => None,
    };

    let mut activations = batch.clone();
    let mut layers = Vec::with_capacity(model.conv_layers.len());
    for (idx, layer) in model.conv_layers.iter().enumerate() {
        let (conv_out, conv_cache) = cheb_conv_forward(layer, scaled, &activations)?;
        let relu_out = relu_forward(&conv_out);
        let relu_mask = relu_out.mapv(|v| v > T::zero());

        let mut dropout_mask = None;
        activations = if model.config.dropout_layers.contains(&idx) {
            if let Some(rng) = dropout_rng.as_mut() {
                let (dropped, mask) = dropout_forward(&relu_out, model.config.dropout_rate, rng)?;
                dropout_mask = Some(mask);
                dropped
            } else {
                relu_out
            }
        } else {
            relu_out
        };

        layers.push(LayerTrace {
            conv_cache,
            relu_mask,
            dropout_mask,
        });
    }

    let last_conv_features = activations;
    let pooled = gap_forward(&last_conv_features);
    let logits = dense_forward(&model.dense, &pooled)?;

    Ok((
        logits.clone(),
        ForwardTrace {
            mode,
            layers,
            last_conv_features,
            pooled,
            logits,
        },
    ))
}

/// Reverse-mode pass through the whole network, reusing the cached masks and
/// Chebyshev stacks. Requires a trace from a train-mode forward.
pub fn model_backward<T: Scalar>(
    model: &Model<T>,
    scaled: &ScaledLaplacian<T>,
    trace: &ForwardTrace<T>,
    grad_logits: &Array2<T>,
) -> Result<Gradients<T>> {
    if !trace.mode.is_train() {
        return Err(Error::InvalidState(
            "model_backward needs a trace from a train-mode forward".into(),
        ));
    }
    if grad_logits.dim() != trace.logits.dim() {
        return Err(Error::DimensionMismatch {
            context: "model_backward".into(),
            expected: format!("{:?}", trace.logits.dim()),
            actual: format!("{:?}", grad_logits.dim()),
        });
    }

    let (grad_pooled, dense_weights, dense_bias) =
        dense_backward(&model.dense, &trace.pooled, grad_logits)?;
    let mut grad = gap_backward(&grad_pooled, scaled.num_nodes());

    let mut conv = Vec::with_capacity(model.conv_layers.len());
    for (idx, layer) in model.conv_layers.iter().enumerate().rev() {
        let layer_trace = &trace.layers[idx];
        if let Some(mask) = &layer_trace.dropout_mask {
            grad = dropout_backward(&grad, mask, model.config.dropout_rate);
        }
        grad.zip_mut_with(&layer_trace.relu_mask, |g, &alive| {
            if !alive {
                *g = T::zero();
            }
        });
        let (grad_in, layer_grads) =
            cheb_conv_backward(layer, scaled, &layer_trace.conv_cache, &grad)?;
        conv.push(layer_grads);
        grad = grad_in;
    }
    conv.reverse();

    Ok(Gradients {
        conv,
        dense_weights,
        dense_bias,
    })
}
