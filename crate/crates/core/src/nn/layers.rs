//! Stateless layers: ReLU, inverted dropout, global average pooling, and the
//! dense classifier head.

use ndarray::{Array1, Array2, Array3, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Elementwise `max(0, x)`.
pub fn relu_forward<T: Scalar>(x: &Array3<T>) -> Array3<T> {
    x.mapv(|v| v.max(T::zero()))
}

/// ReLU gradient with subgradient 0 at exactly 0. `output` is the forward
/// result; `output > 0` holds exactly where the input was positive.
pub fn relu_backward<T: Scalar>(grad_out: &Array3<T>, output: &Array3<T>) -> Array3<T> {
    let mut grad = grad_out.clone();
    grad.zip_mut_with(output, |g, &y| {
        if y <= T::zero() {
            *g = T::zero();
        }
    });
    grad
}

/// Inverted dropout: zero each activation with probability `rate` and scale
/// survivors by `1/(1-rate)`, so evaluation needs no rescaling. Returns the
/// output and the keep mask. Mask entries are drawn in logical index order
/// from the supplied generator.
pub fn dropout_forward<T: Scalar, R: Rng>(
    x: &Array3<T>,
    rate: f64,
    rng: &mut R,
) -> Result<(Array3<T>, Array3<bool>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidInput(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    let scale = cast::<T>(1.0 / (1.0 - rate));
    let mut mask = Array3::from_elem(x.dim(), false);
    for keep in mask.iter_mut() {
        *keep = rng.random::<f64>() >= rate;
    }
    let mut out = x.clone();
    out.zip_mut_with(&mask, |v, &keep| {
        *v = if keep { *v * scale } else { T::zero() };
    });
    Ok((out, mask))
}

/// Dropout gradient: reuse the cached mask, never resample.
pub fn dropout_backward<T: Scalar>(
    grad_out: &Array3<T>,
    mask: &Array3<bool>,
    rate: f64,
) -> Array3<T> {
    let scale = cast::<T>(1.0 / (1.0 - rate));
    let mut grad = grad_out.clone();
    grad.zip_mut_with(mask, |g, &keep| {
        *g = if keep { *g * scale } else { T::zero() };
    });
    grad
}

/// Global average pooling: `batch x d_x x f -> batch x f` by node mean.
pub fn gap_forward<T: Scalar>(x: &Array3<T>) -> Array2<T> {
    let nodes = cast::<T>(x.dim().1 as f64);
    x.sum_axis(Axis(1)) / nodes
}

/// GAP gradient: spread `grad_out / d_x` uniformly over the nodes.
pub fn gap_backward<T: Scalar>(grad_out: &Array2<T>, num_nodes: usize) -> Array3<T> {
    let (batch, channels) = grad_out.dim();
    let nodes = cast::<T>(num_nodes as f64);
    Array3::from_shape_fn((batch, num_nodes, channels), |(s, _, f)| {
        grad_out[[s, f]] / nodes
    })
}

/// Dense classifier head: `f x c` weights plus a per-class bias.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams<T: Scalar> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> DenseParams<T> {
    pub fn new(weights: Array2<T>, bias: Array1<T>) -> Result<Self> {
        if weights.ncols() != bias.len() {
            return Err(Error::DimensionMismatch {
                context: "dense bias".into(),
                expected: format!("{}", weights.ncols()),
                actual: format!("{}", bias.len()),
            });
        }
        if weights.iter().any(|x| !x.is_finite()) || bias.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                location: "dense parameters".into(),
            });
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros(features: usize, classes: usize) -> Self {
        Self {
            weights: Array2::zeros((features, classes)),
            bias: Array1::zeros(classes),
        }
    }

    pub fn num_features(&self) -> usize {
        self.weights.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.weights.ncols()
    }
}

/// `logits = pooled . weights + bias`.
pub fn dense_forward<T: Scalar>(params: &DenseParams<T>, pooled: &Array2<T>) -> Result<Array2<T>> {
    if pooled.ncols() != params.num_features() {
        return Err(Error::DimensionMismatch {
            context: "dense_forward".into(),
            expected: format!("batch x {}", params.num_features()),
            actual: format!("{} x {}", pooled.nrows(), pooled.ncols()),
        });
    }
    let mut logits = pooled.dot(&params.weights);
    for mut row in logits.rows_mut() {
        row += &params.bias;
    }
    Ok(logits)
}

/// Gradients of the dense head and of its pooled input.
pub fn dense_backward<T: Scalar>(
    params: &DenseParams<T>,
    pooled: &Array2<T>,
    grad_logits: &Array2<T>,
) -> Result<(Array2<T>, Array2<T>, Array1<T>)> {
    if grad_logits.dim() != (pooled.nrows(), params.num_classes()) {
        return Err(Error::DimensionMismatch {
            context: "dense_backward".into(),
            expected: format!("{} x {}", pooled.nrows(), params.num_classes()),
            actual: format!("{} x {}", grad_logits.nrows(), grad_logits.ncols()),
        });
    }
    let grad_pooled = grad_logits.dot(&params.weights.t());
    let grad_weights = pooled.t().dot(grad_logits);
    let grad_bias = grad_logits.sum_axis(Axis(0));
    Ok((grad_pooled, grad_weights, grad_bias))
}
