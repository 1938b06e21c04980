//! Adam optimizer with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Gradients, Model};
use crate::scalar::{cast, Scalar};

/// Training hyperparameters. `learning_rate` is the initial rate; the
/// training loop owns the decayed value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub total_steps: usize,
    pub eval_every: usize,
    pub lr_decay_factor: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 5e-4,
            batch_size: 200,
            total_steps: 500,
            eval_every: 10,
            lr_decay_factor: 0.5,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0 < beta && beta < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must lie in (0, 1), got {beta}"
                )));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "weight decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.batch_size < 2 || self.batch_size % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "batch size must be even and positive (balanced halves), got {}",
                self.batch_size
            )));
        }
        if self.total_steps == 0 {
            return Err(Error::InvalidInput("total_steps must be positive".into()));
        }
        if self.eval_every == 0 || self.total_steps % self.eval_every != 0 {
            return Err(Error::InvalidInput(format!(
                "eval_every ({}) must divide total_steps ({})",
                self.eval_every, self.total_steps
            )));
        }
        if !(0.0 < self.lr_decay_factor && self.lr_decay_factor <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "lr decay factor must lie in (0, 1], got {}",
                self.lr_decay_factor
            )));
        }
        Ok(())
    }
}

/// First/second moment estimates mirroring the model's parameter tensors.
#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar> {
    first_moment: Vec<Vec<T>>,
    second_moment: Vec<Vec<T>>,
    step_count: usize,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(model: &Model<T>) -> Self {
        let shapes: Vec<usize> = model.param_refs().iter().map(|p| p.values.len()).collect();
        Self {
            first_moment: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            second_moment: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }
}

/// One Adam update with bias correction:
/// `m <- b1 m + (1-b1) g`, `v <- b2 v + (1-b2) g^2`,
/// `p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)`.
///
/// Gradients are checked for finiteness before anything mutates; a
/// non-finite gradient aborts the step with a numerical error.
pub fn adam_step<T: Scalar>(
    model: &mut Model<T>,
    grads: &Gradients<T>,
    state: &mut AdamState<T>,
    learning_rate: T,
    config: &TrainConfig,
) -> Result<()> {
    let grad_refs = grads.param_refs();
    for param in &grad_refs {
        if param.values.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite gradient in {}; step aborted",
                param.name
            )));
        }
    }

    let mut params = model.param_muts();
    if params.len() != grad_refs.len() || params.len() != state.first_moment.len() {
        return Err(Error::DimensionMismatch {
            context: "adam_step".into(),
            expected: format!("{} tensors", params.len()),
            actual: format!(
                "{} gradient / {} state tensors",
                grad_refs.len(),
                state.first_moment.len()
            ),
        });
    }

    let t = state.step_count + 1;
    let beta1 = cast::<T>(config.beta1);
    let beta2 = cast::<T>(config.beta2);
    let epsilon = cast::<T>(config.epsilon);
    let one = T::one();
    let bias1 = one - beta1.powi(t as i32);
    let bias2 = one - beta2.powi(t as i32);

    for ((param, grad), (m, v)) in params
        .iter_mut()
        .zip(grad_refs.iter())
        .zip(state.first_moment.iter_mut().zip(state.second_moment.iter_mut()))
    {
        if param.values.len() != grad.values.len() || param.values.len() != m.len() {
            return Err(Error::DimensionMismatch {
                context: format!("adam_step tensor {}", param.name),
                expected: format!("{}", param.values.len()),
                actual: format!("{} / {}", grad.values.len(), m.len()),
            });
        }
        for i in 0..param.values.len() {
            let g = grad.values[i];
            m[i] = beta1 * m[i] + (one - beta1) * g;
            v[i] = beta2 * v[i] + (one - beta2) * g * g;
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            param.values[i] = param.values[i] - learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    state.step_count = t;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_model, ModelConfig};
    use ndarray::{Array1, Array2, Array3};
    use std::collections::BTreeSet;

    fn scalar_model(value: f64) -> Model<f64> {
        // Smallest legal architecture; we treat its first coefficient as "the"
        // scalar parameter in optimizer tests.
        let cfg = ModelConfig {
            channels: vec![1],
            num_coeffs: 1,
            dropout_layers: BTreeSet::new(),
            dropout_rate: 0.5,
            num_classes: 2,
            input_channels: 1,
        };
        let mut model = Model::zeros(cfg).unwrap();
        model.param_muts()[0].values[0] = value;
        model
    }

    fn grads_like(model: &Model<f64>, first_coeff: f64) -> Gradients<f64> {
        let mut grads = Gradients {
            conv: model
                .conv_layers()
                .iter()
                .map(|l| crate::nn::ChebConvGrads {
                    coeffs: Array3::zeros(l.coeffs.dim()),
                    bias: Array1::zeros(l.bias.len()),
                })
                .collect(),
            dense_weights: Array2::zeros(model.dense().weights.dim()),
            dense_bias: Array1::zeros(model.dense().bias.len()),
        };
        grads.conv[0].coeffs[[0, 0, 0]] = first_coeff;
        grads
    }

    #[test]
    fn zero_gradients_leave_parameters_bitwise_unchanged() {
        let cfg = ModelConfig {
            channels: vec![3, 2],
            num_coeffs: 2,
            dropout_layers: BTreeSet::new(),
            dropout_rate: 0.5,
            num_classes: 2,
            input_channels: 2,
        };
        let mut model: Model<f64> = init_model(cfg, 5).unwrap();
        let before = model.flatten_params();
        let grads = grads_like(&model, 0.0);
        let mut state = AdamState::new(&model);
        adam_step(&mut model, &grads, &mut state, 0.001, &TrainConfig::default()).unwrap();
        assert_eq!(model.flatten_params(), before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_the_learning_rate() {
        let mut model = scalar_model(1.0);
        let grads = grads_like(&model, 1.0);
        let mut state = AdamState::new(&model);
        adam_step(&mut model, &grads, &mut state, 0.1, &TrainConfig::default()).unwrap();
        // Bias correction makes m_hat = v_hat = 1 on the first step.
        let expected = 1.0 - 0.1 * 1.0 / (1.0 + 1e-8);
        assert!((model.param_refs()[0].values[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradient_aborts_without_mutation() {
        let mut model = scalar_model(1.0);
        let before = model.flatten_params();
        let grads = grads_like(&model, f64::NAN);
        let mut state = AdamState::new(&model);
        let err = adam_step(&mut model, &grads, &mut state, 0.1, &TrainConfig::default());
        assert!(matches!(err, Err(Error::Numerical(_))));
        assert_eq!(model.flatten_params(), before);
        assert_eq!(state.step_count(), 0);
    }

    #[test]
    fn trajectory_matches_reference_adam_on_quadratic() {
        // Loss (x - 3)^2 / 2, gradient x - 3, from x = 0.
        let mut model = scalar_model(0.0);
        let mut state = AdamState::new(&model);
        let config = TrainConfig::default();
        let lr = 0.1;

        // Independently coded reference trajectory.
        let (mut x_ref, mut m_ref, mut v_ref) = (0.0f64, 0.0f64, 0.0f64);
        for t in 1..=50 {
            let x = model.param_refs()[0].values[0];
            let grads = grads_like(&model, x - 3.0);
            adam_step(&mut model, &grads, &mut state, lr, &config).unwrap();

            let g = x_ref - 3.0;
            m_ref = 0.9 * m_ref + 0.1 * g;
            v_ref = 0.999 * v_ref + 0.001 * g * g;
            let m_hat = m_ref / (1.0 - 0.9f64.powi(t));
            let v_hat = v_ref / (1.0 - 0.999f64.powi(t));
            x_ref -= lr * m_hat / (v_hat.sqrt() + 1e-8);

            let x_new = model.param_refs()[0].values[0];
            assert!(
                (x_new - x_ref).abs() < 1e-12,
                "step {t}: {x_new} vs reference {x_ref}"
            );
        }
        // Sanity: heading toward the minimum.
        assert!((model.param_refs()[0].values[0] - 3.0).abs() < 3.0);
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let mut cfg = TrainConfig::default();
        cfg.beta1 = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::default();
        cfg.batch_size = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::default();
        cfg.eval_every = 7;
        assert!(cfg.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }
}
