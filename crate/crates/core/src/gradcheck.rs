//! Central finite differences for verifying hand-derived gradients.
//!
//! The check only ever calls the forward path, so it stays independent of
//! the backward implementation it validates.

/// Gradient of `f` at `base` by central differences with the given step.
pub fn central_diff_gradient<F>(mut f: F, base: &[f64], step: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut point = base.to_vec();
    (0..base.len())
        .map(|i| {
            point[i] = base[i] + step;
            let plus = f(&point);
            point[i] = base[i] - step;
            let minus = f(&point);
            point[i] = base[i];
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

/// Worst relative error between two gradient vectors. The denominator is
/// floored at 1 so near-zero entries are compared absolutely, which keeps
/// finite-difference roundoff from dominating dead activations.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient lengths differ");
    analytic
        .iter()
        .zip(numeric.iter())
        .map(|(&a, &n)| (a - n).abs() / a.abs().max(n.abs()).max(1.0))
        .fold(0.0, f64::max)
}
