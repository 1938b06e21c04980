//! Chebyshev graph convolution with explicit forward and backward passes.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Array3};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{chebyshev_stack, ScaledLaplacian};

/// Trainable parameters of one graph-convolution layer: a Chebyshev
/// coefficient tensor of shape `f_in x f_out x k` and a per-output-channel
/// bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebConvParams<T: Scalar> {
    pub coeffs: Array3<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> ChebConvParams<T> {
    pub fn new(coeffs: Array3<T>, bias: Array1<T>) -> Result<Self> {
        let (_, f_out, k) = coeffs.dim();
        if k < 1 {
            return Err(Error::InvalidInput(
                "conv layer needs at least one Chebyshev coefficient".into(),
            ));
        }
        if bias.len() != f_out {
            return Err(Error::DimensionMismatch {
                context: "conv bias".into(),
                expected: format!("{f_out}"),
                actual: format!("{}", bias.len()),
            });
        }
        if coeffs.iter().any(|x| !x.is_finite()) || bias.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                location: "conv parameters".into(),
            });
        }
        Ok(Self { coeffs, bias })
    }

    pub fn zeros(f_in: usize, f_out: usize, num_coeffs: usize) -> Self {
        Self {
            coeffs: Array3::zeros((f_in, f_out, num_coeffs)),
            bias: Array1::zeros(f_out),
        }
    }

    pub fn input_channels(&self) -> usize {
        self.coeffs.dim().0
    }

    pub fn output_channels(&self) -> usize {
        self.coeffs.dim().1
    }

    pub fn num_coeffs(&self) -> usize {
        self.coeffs.dim().2
    }

    /// Coefficient matrices per Chebyshev order, each `f_in x f_out`.
    fn coeff_matrices(&self) -> Vec<Array2<T>> {
        (0..self.num_coeffs())
            .map(|k| self.coeffs.slice(s![.., .., k]).to_owned())
            .collect()
    }
}

/// Values cached by the forward pass and reused by the backward pass:
/// the Chebyshev stacks of the layer input, in batch-concatenated form.
#[derive(Debug, Clone)]
pub struct ChebConvCache<T: Scalar> {
    /// `num_coeffs` matrices of shape `d_x x (batch * f_in)`.
    stack: Vec<Array2<T>>,
    batch: usize,
    f_in: usize,
}

/// Gradients of one conv layer, same shapes as [`ChebConvParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChebConvGrads<T: Scalar> {
    pub coeffs: Array3<T>,
    pub bias: Array1<T>,
}

/// Stack a `batch x d_x x f` tensor into one `d_x x (batch * f)` matrix so a
/// single Chebyshev recursion covers the whole batch (`T_k` acts column-wise).
fn concat_batch<T: Scalar>(x: &Array3<T>) -> Array2<T> {
    let (batch, d, f) = x.dim();
    let mut out = Array2::zeros((d, batch * f));
    for sample in 0..batch {
        for node in 0..d {
            for channel in 0..f {
                out[[node, sample * f + channel]] = x[[sample, node, channel]];
            }
        }
    }
    out
}

/// Forward pass: `out[s,:,o] = sum_i sum_k coeffs[i,o,k] (T_k(L~) x[s,:,i]) + bias[o]`.
pub fn cheb_conv_forward<T: Scalar>(
    params: &ChebConvParams<T>,
    scaled: &ScaledLaplacian<T>,
    x: &Array3<T>,
) -> Result<(Array3<T>, ChebConvCache<T>)> {
    let (batch, d, f_in) = x.dim();
    if d != scaled.num_nodes() || f_in != params.input_channels() {
        return Err(Error::DimensionMismatch {
            context: "cheb_conv_forward".into(),
            expected: format!(
                "batch x {} x {}",
                scaled.num_nodes(),
                params.input_channels()
            ),
            actual: format!("{batch} x {d} x {f_in}"),
        });
    }
    let f_out = params.output_channels();
    let k = params.num_coeffs();

    let stack = chebyshev_stack(scaled, &concat_batch(x), k)?;
    let coeff_mats = params.coeff_matrices();

    let mut out = Array3::zeros((batch, d, f_out));
    let mut acc = Array2::zeros((d, f_out));
    for sample in 0..batch {
        acc.fill(T::zero());
        for (order, coeff) in coeff_mats.iter().enumerate() {
            let block = stack[order].slice(s![.., sample * f_in..(sample + 1) * f_in]);
            general_mat_mul(T::one(), &block, coeff, T::one(), &mut acc);
        }
        for node in 0..d {
            for o in 0..f_out {
                out[[sample, node, o]] = acc[[node, o]] + params.bias[o];
            }
        }
    }

    Ok((
        out,
        ChebConvCache {
            stack,
            batch,
            f_in,
        },
    ))
}

/// Backward pass. `T_k(L~)` is symmetric, so the input gradient reuses the
/// same Chebyshev recursion applied to the output gradient:
///
/// - `grad_coeffs[i,o,k] = sum_s <T_k(L~) x[s,:,i], grad_out[s,:,o]>`
/// - `grad_bias[o] = sum_s sum_v grad_out[s,v,o]`
/// - `grad_x[s,:,i] = sum_o sum_k coeffs[i,o,k] T_k(L~) grad_out[s,:,o]`
pub fn cheb_conv_backward<T: Scalar>(
    params: &ChebConvParams<T>,
    scaled: &ScaledLaplacian<T>,
    cache: &ChebConvCache<T>,
    grad_out: &Array3<T>,
) -> Result<(Array3<T>, ChebConvGrads<T>)> {
    let (batch, d, f_out) = grad_out.dim();
    if batch != cache.batch || d != scaled.num_nodes() || f_out != params.output_channels() {
        return Err(Error::DimensionMismatch {
            context: "cheb_conv_backward".into(),
            expected: format!(
                "{} x {} x {}",
                cache.batch,
                scaled.num_nodes(),
                params.output_channels()
            ),
            actual: format!("{batch} x {d} x {f_out}"),
        });
    }
    let f_in = cache.f_in;
    let k = params.num_coeffs();

    let mut grad_bias = Array1::zeros(f_out);
    for sample in 0..batch {
        for node in 0..d {
            for o in 0..f_out {
                grad_bias[o] += grad_out[[sample, node, o]];
            }
        }
    }

    let grad_cat = concat_batch(grad_out);
    let mut grad_coeffs = Array3::zeros((f_in, f_out, k));
    let mut per_order = Array2::zeros((f_in, f_out));
    for order in 0..k {
        per_order.fill(T::zero());
        for sample in 0..batch {
            let x_block = cache.stack[order].slice(s![.., sample * f_in..(sample + 1) * f_in]);
            let g_block = grad_cat.slice(s![.., sample * f_out..(sample + 1) * f_out]);
            general_mat_mul(T::one(), &x_block.t(), &g_block, T::one(), &mut per_order);
        }
        grad_coeffs.slice_mut(s![.., .., order]).assign(&per_order);
    }

    let grad_stack = chebyshev_stack(scaled, &grad_cat, k)?;
    let coeff_mats = params.coeff_matrices();
    let mut grad_x = Array3::zeros((batch, d, f_in));
    let mut acc = Array2::zeros((d, f_in));
    for sample in 0..batch {
        acc.fill(T::zero());
        for (order, coeff) in coeff_mats.iter().enumerate() {
            let g_block = grad_stack[order].slice(s![.., sample * f_out..(sample + 1) * f_out]);
            general_mat_mul(T::one(), &g_block, &coeff.t(), T::one(), &mut acc);
        }
        for node in 0..d {
            for i in 0..f_in {
                grad_x[[sample, node, i]] = acc[[node, i]];
            }
        }
    }

    Ok((
        grad_x,
        ChebConvGrads {
            coeffs: grad_coeffs,
            bias: grad_bias,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Graph;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_laplacian(n: usize, seed: u64) -> ScaledLaplacian<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let v: f64 = rng.random();
                w[[i, j]] = v;
                w[[j, i]] = v;
            }
        }
        ScaledLaplacian::from_graph(&Graph::new(w).unwrap()).unwrap()
    }

    fn identity_params(channels: usize) -> ChebConvParams<f64> {
        let mut coeffs = Array3::<f64>::zeros((channels, channels, 1));
        for i in 0..channels {
            coeffs[[i, i, 0]] = 1.0;
        }
        ChebConvParams::new(coeffs, Array1::zeros(channels)).unwrap()
    }

    #[test]
    fn order_one_identity_filter_passes_input_through() {
        let scaled = small_laplacian(4, 1);
        let params = identity_params(2);
        let x = Array3::from_shape_fn((3, 4, 2), |(s, v, f)| (s + 2 * v + f) as f64 * 0.25);
        let (out, _) = cheb_conv_forward(&params, &scaled, &x).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn zero_coeffs_yield_bias_everywhere() {
        let scaled = small_laplacian(4, 2);
        let params =
            ChebConvParams::new(Array3::zeros((2, 3, 2)), array![0.5, -1.0, 2.0]).unwrap();
        let x = Array3::from_shape_fn((2, 4, 2), |(s, v, f)| (s + v + f) as f64);
        let (out, _) = cheb_conv_forward(&params, &scaled, &x).unwrap();
        for sample in 0..2 {
            for node in 0..4 {
                assert_eq!(out[[sample, node, 0]], 0.5);
                assert_eq!(out[[sample, node, 1]], -1.0);
                assert_eq!(out[[sample, node, 2]], 2.0);
            }
        }
    }

    #[test]
    fn forward_matches_naive_triple_loop() {
        let d = 6;
        let (f_in, f_out, k) = (2, 3, 3);
        let scaled = small_laplacian(d, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let coeffs = Array3::from_shape_fn((f_in, f_out, k), |_| rng.random::<f64>() - 0.5);
        let bias = Array1::from_shape_fn(f_out, |_| rng.random::<f64>() - 0.5);
        let params = ChebConvParams::new(coeffs.clone(), bias.clone()).unwrap();
        let x = Array3::from_shape_fn((2, d, f_in), |_| rng.random::<f64>() - 0.5);

        // Oracle: explicitly materialized T_k matrices and a triple loop.
        let mut t_mats = vec![Array2::<f64>::eye(d), scaled.matrix().clone()];
        for _ in 2..k {
            let prev = t_mats[t_mats.len() - 1].clone();
            let prev2 = t_mats[t_mats.len() - 2].clone();
            t_mats.push(scaled.matrix().dot(&prev) * 2.0 - &prev2);
        }
        let mut expected = Array3::<f64>::zeros((2, d, f_out));
        for s in 0..2 {
            for o in 0..f_out {
                for v in 0..d {
                    let mut sum = bias[o];
                    for i in 0..f_in {
                        for order in 0..k {
                            let mut filtered = 0.0;
                            for u in 0..d {
                                filtered += t_mats[order][[v, u]] * x[[s, u, i]];
                            }
                            sum += coeffs[[i, o, order]] * filtered;
                        }
                    }
                    expected[[s, v, o]] = sum;
                }
            }
        }

        let (out, _) = cheb_conv_forward(&params, &scaled, &x).unwrap();
        let max_delta = out
            .iter()
            .zip(expected.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_delta < 1e-10, "max delta {max_delta}");
    }

    #[test]
    fn backward_of_zero_gradient_is_zero() {
        let scaled = small_laplacian(4, 4);
        let params = identity_params(2);
        let x = Array3::from_shape_fn((2, 4, 2), |(s, v, f)| (s + v + f) as f64);
        let (_, cache) = cheb_conv_forward(&params, &scaled, &x).unwrap();
        let (grad_x, grads) =
            cheb_conv_backward(&params, &scaled, &cache, &Array3::zeros((2, 4, 2))).unwrap();
        assert!(grad_x.iter().all(|&g| g == 0.0));
        assert!(grads.coeffs.iter().all(|&g| g == 0.0));
        assert!(grads.bias.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn identity_filter_passes_gradient_through() {
        let scaled = small_laplacian(5, 5);
        let params = identity_params(3);
        let x = Array3::from_shape_fn((2, 5, 3), |(s, v, f)| (s * 7 + v * 3 + f) as f64 * 0.1);
        let (_, cache) = cheb_conv_forward(&params, &scaled, &x).unwrap();
        let grad_out = Array3::from_shape_fn((2, 5, 3), |(s, v, f)| (s + v + 2 * f) as f64 * 0.2);
        let (grad_x, _) = cheb_conv_backward(&params, &scaled, &cache, &grad_out).unwrap();
        assert_eq!(grad_x, grad_out);
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let scaled = small_laplacian(4, 6);
        let params = identity_params(2);
        let bad = Array3::<f64>::zeros((2, 5, 2));
        assert!(cheb_conv_forward(&params, &scaled, &bad).is_err());
        let x = Array3::<f64>::zeros((2, 4, 2));
        let (_, cache) = cheb_conv_forward(&params, &scaled, &x).unwrap();
        let bad_grad = Array3::<f64>::zeros((2, 4, 3));
        assert!(cheb_conv_backward(&params, &scaled, &cache, &bad_grad).is_err());
    }
}
