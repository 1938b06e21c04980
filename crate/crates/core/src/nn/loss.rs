//! Loss terms: softmax cross-entropy and the L2 penalty on weights.

use ndarray::Array2;

use super::model::{Gradients, Model, ParamKind};
use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Mean softmax cross-entropy over a batch, with max-subtraction for
/// stability. Returns the loss and its gradient w.r.t. the logits,
/// `(softmax - one_hot) / batch`.
pub fn softmax_cross_entropy<T: Scalar>(
    logits: &Array2<T>,
    labels: &[usize],
) -> Result<(T, Array2<T>)> {
    let (batch, classes) = logits.dim();
    if labels.len() != batch {
        return Err(Error::DimensionMismatch {
            context: "softmax_cross_entropy labels".into(),
            expected: format!("{batch}"),
            actual: format!("{}", labels.len()),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::InvalidInput(format!(
            "label {bad} out of range for {classes} classes"
        )));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite logits".into()));
    }

    let batch_t = cast::<T>(batch as f64);
    let mut grad = Array2::zeros((batch, classes));
    let mut loss = T::zero();
    for s in 0..batch {
        let row = logits.row(s);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut denom = T::zero();
        for c in 0..classes {
            denom += (row[c] - max).exp();
        }
        let log_denom = denom.ln();
        loss += log_denom - (row[labels[s]] - max);
        for c in 0..classes {
            let softmax = (row[c] - max).exp() / denom;
            let target = if c == labels[s] { T::one() } else { T::zero() };
            grad[[s, c]] = (softmax - target) / batch_t;
        }
    }
    Ok((loss / batch_t, grad))
}

/// L2 penalty term: `decay * sum(weights^2)` over conv coefficients and dense
/// weights. Biases are excluded.
pub fn l2_penalty<T: Scalar>(model: &Model<T>, decay: T) -> T {
    let sum: T = model
        .param_refs()
        .iter()
        .filter(|p| p.kind == ParamKind::Weight)
        .map(|p| p.values.iter().map(|&w| w * w).sum::<T>())
        .sum();
    decay * sum
}

/// Add the L2 gradient contribution `2 * decay * w` to the matching weight
/// gradients (biases untouched).
pub fn add_l2_gradients<T: Scalar>(model: &Model<T>, decay: T, grads: &mut Gradients<T>) {
    let two = cast::<T>(2.0);
    for (layer, grad_layer) in model.conv_layers().iter().zip(grads.conv.iter_mut()) {
        grad_layer
            .coeffs
            .zip_mut_with(&layer.coeffs, |g, &w| *g += two * decay * w);
    }
    grads
        .dense_weights
        .zip_mut_with(&model.dense().weights, |g, &w| *g += two * decay * w);
}
