//! Graph representations, normalized/scaled Laplacians, Chebyshev polynomial
//! application, and partial-correlation network modelling.
//!
//! All operations here are pure functions of their inputs and safe to call
//! concurrently. The spectral pipeline is: build a [`Graph`], take its
//! normalized Laplacian, estimate the largest eigenvalue, rescale to
//! [`ScaledLaplacian`], then filter node signals through the Chebyshev
//! recursion with [`chebyshev_stack`].

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Default Rayleigh-quotient tolerance for the power iteration.
pub const LAMBDA_TOL: f64 = 1e-7;
/// Default iteration cap for the power iteration.
pub const LAMBDA_MAX_ITERS: usize = 1000;
/// Upper bound on the spectrum of any normalized Laplacian.
pub const LAMBDA_UPPER_BOUND: f64 = 2.0;

/// Shared node structure: a symmetric, non-negative, zero-diagonal weighted
/// adjacency over at least two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph<T: Scalar> {
    num_nodes: usize,
    weights: Array2<T>,
}

impl<T: Scalar> Graph<T> {
    /// Validate the adjacency invariants and wrap the matrix.
    pub fn new(weights: Array2<T>) -> Result<Self> {
        let (rows, cols) = weights.dim();
        if rows != cols {
            return Err(Error::DimensionMismatch {
                context: "graph weights".into(),
                expected: "square matrix".into(),
                actual: format!("{rows}x{cols}"),
            });
        }
        if rows < 2 {
            return Err(Error::InvalidInput(format!(
                "graph needs at least 2 nodes, got {rows}"
            )));
        }
        for ((i, j), &w) in weights.indexed_iter() {
            if !w.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("graph weights[{i},{j}]"),
                });
            }
            if w < T::zero() {
                return Err(Error::InvalidInput(format!(
                    "graph weights must be non-negative, weights[{i},{j}] = {w}"
                )));
            }
            if i == j && w != T::zero() {
                return Err(Error::InvalidInput(format!(
                    "graph diagonal must be zero, weights[{i},{i}] = {w}"
                )));
            }
            if weights[[j, i]] != w {
                return Err(Error::InvalidInput(format!(
                    "graph weights must be exactly symmetric at [{i},{j}]"
                )));
            }
        }
        Ok(Self {
            num_nodes: rows,
            weights,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn weights(&self) -> &Array2<T> {
        &self.weights
    }

    /// Weighted node degrees (row sums).
    pub fn degrees(&self) -> Array1<T> {
        self.weights.sum_axis(ndarray::Axis(1))
    }
}

/// The rescaled Laplacian `(2/lambda_max) L - I` together with the
/// `lambda_max` used and whether its estimation converged. This is the
/// operand of all Chebyshev filtering; its spectrum lies in [-1, 1] when
/// `lambda_max` is the true spectral maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledLaplacian<T: Scalar> {
    matrix: Array2<T>,
    lambda_max: T,
    converged: bool,
}

impl<T: Scalar> ScaledLaplacian<T> {
    pub fn matrix(&self) -> &Array2<T> {
        &self.matrix
    }

    pub fn lambda_max(&self) -> T {
        self.lambda_max
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn num_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    /// Full pipeline for a graph: normalized Laplacian, power-iteration
    /// estimate of the top eigenvalue (default tolerance and iteration cap),
    /// then rescaling. The convergence flag of the estimate is carried over.
    pub fn from_graph(graph: &Graph<T>) -> Result<Self> {
        let laplacian = normalized_laplacian(graph);
        let (lambda_max, converged) =
            estimate_lambda_max(&laplacian, cast(LAMBDA_TOL), LAMBDA_MAX_ITERS);
        let mut scaled = scale_laplacian(&laplacian, lambda_max)?;
        scaled.converged = converged;
        Ok(scaled)
    }
}

/// Representative timeseries: T observations (rows) of d variables (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeseriesMatrix<T: Scalar> {
    data: Array2<T>,
}

impl<T: Scalar> TimeseriesMatrix<T> {
    pub fn new(data: Array2<T>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::InvalidInput(format!(
                "timeseries needs at least 2 observations, got {}",
                data.nrows()
            )));
        }
        for ((i, j), &x) in data.indexed_iter() {
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("timeseries[{i},{j}]"),
                });
            }
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &Array2<T> {
        &self.data
    }

    pub fn num_observations(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_variables(&self) -> usize {
        self.data.ncols()
    }
}

/// Normalized Laplacian `L = I - D^{-1/2} W D^{-1/2}`.
///
/// For degree-zero nodes the `D^{-1/2}` entry is taken as 0, which leaves
/// `L[i,i] = 1` for isolated nodes and keeps the spectrum inside [0, 2].
/// The result is exactly symmetric (the lower triangle mirrors the upper).
pub fn normalized_laplacian<T: Scalar>(graph: &Graph<T>) -> Array2<T> {
    let n = graph.num_nodes();
    let degrees = graph.degrees();
    let inv_sqrt: Vec<T> = degrees
        .iter()
        .map(|&d| {
            if d > T::zero() {
                T::one() / d.sqrt()
            } else {
                T::zero()
            }
        })
        .collect();

    let w = graph.weights();
    let mut laplacian = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let scaled = inv_sqrt[i] * w[[i, j]] * inv_sqrt[j];
            let value = if i == j { T::one() - scaled } else { -scaled };
            laplacian[[i, j]] = value;
            laplacian[[j, i]] = value;
        }
    }
    laplacian
}

/// Largest-eigenvalue estimate by power iteration with a deterministic start.
///
/// The start vector is the squared-row-norm vector of the matrix, which is a
/// function of the matrix content only; relabelling the nodes permutes it
/// consistently, so estimates agree across node permutations. On regular
/// graphs that vector is constant and may lie in the null space, in which
/// case a fixed ramp vector is used instead.
///
/// Returns `(lambda, true)` once the Rayleigh quotient changes by less than
/// `tol` between iterations, or `(2.0, false)` after `max_iters` without
/// convergence — 2 is the universal bound for normalized Laplacians.
pub fn estimate_lambda_max<T: Scalar>(
    matrix: &Array2<T>,
    tol: T,
    max_iters: usize,
) -> (T, bool) {
    let n = matrix.nrows();
    debug_assert_eq!(n, matrix.ncols(), "matrix must be square");

    // Start vector: squared row norms, falling back to a ramp when that
    // direction is annihilated by the matrix.
    let mut start: Array1<T> = Array1::from_iter(
        matrix
            .rows()
            .into_iter()
            .map(|row| row.iter().map(|&x| x * x).sum()),
    );
    if !normalize(&mut start) || norm(&matrix.dot(&start)) == T::zero() {
        start = Array1::from_iter((0..n).map(|i| {
            T::one() + cast::<T>((i + 1) as f64) / cast::<T>(n as f64)
        }));
        normalize(&mut start);
        if norm(&matrix.dot(&start)) == T::zero() {
            // The matrix annihilates both probes; treat it as (numerically) zero.
            return (T::zero(), true);
        }
    }

    let mut vector = start;
    let mut previous: Option<T> = None;
    for _ in 0..max_iters {
        let image = matrix.dot(&vector);
        let rayleigh = vector.dot(&image);
        if let Some(prev) = previous {
            if (rayleigh - prev).abs() < tol {
                return (rayleigh, true);
            }
        }
        previous = Some(rayleigh);
        let mut next = image;
        if !normalize(&mut next) {
            // Landed exactly in the null space; the quotient cannot move further.
            return (rayleigh, true);
        }
        vector = next;
    }
    (cast(LAMBDA_UPPER_BOUND), false)
}

fn norm<T: Scalar>(v: &Array1<T>) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn normalize<T: Scalar>(v: &mut Array1<T>) -> bool {
    let n = norm(v);
    if n == T::zero() {
        return false;
    }
    v.mapv_inplace(|x| x / n);
    true
}

/// Rescale a Laplacian to the Chebyshev domain: `(2/lambda_max) L - I`.
pub fn scale_laplacian<T: Scalar>(laplacian: &Array2<T>, lambda_max: T) -> Result<ScaledLaplacian<T>> {
    if !(lambda_max.is_finite() && lambda_max > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "lambda_max must be positive and finite, got {lambda_max}"
        )));
    }
    let n = laplacian.nrows();
    if n != laplacian.ncols() {
        return Err(Error::DimensionMismatch {
            context: "scale_laplacian".into(),
            expected: "square matrix".into(),
            actual: format!("{}x{}", n, laplacian.ncols()),
        });
    }
    let factor = cast::<T>(2.0) / lambda_max;
    let mut matrix = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let mut value = factor * laplacian[[i, j]];
            if i == j {
                value = value - T::one();
            }
            matrix[[i, j]] = value;
            matrix[[j, i]] = value;
        }
    }
    Ok(ScaledLaplacian {
        matrix,
        lambda_max,
        converged: true,
    })
}

/// Apply the Chebyshev recursion to a node-signal block.
///
/// Returns `[T_0(L~)X, T_1(L~)X, ..., T_{K-1}(L~)X]` where `T_0(L~)X = X`,
/// `T_1(L~)X = L~X` and `T_k X = 2 L~ (T_{k-1} X) - T_{k-2} X`.
pub fn chebyshev_stack<T: Scalar>(
    scaled: &ScaledLaplacian<T>,
    signals: &Array2<T>,
    num_coeffs: usize,
) -> Result<Vec<Array2<T>>> {
    if num_coeffs < 1 {
        return Err(Error::InvalidInput(
            "chebyshev_stack needs at least one coefficient".into(),
        ));
    }
    if signals.ncols() < 1 {
        return Err(Error::InvalidInput(
            "chebyshev_stack needs at least one signal column".into(),
        ));
    }
    if signals.nrows() != scaled.num_nodes() {
        return Err(Error::DimensionMismatch {
            context: "chebyshev_stack".into(),
            expected: format!("{} signal rows", scaled.num_nodes()),
            actual: format!("{}", signals.nrows()),
        });
    }

    let mut stack = Vec::with_capacity(num_coeffs);
    stack.push(signals.clone());
    if num_coeffs > 1 {
        stack.push(scaled.matrix().dot(signals));
    }
    let two = cast::<T>(2.0);
    for k in 2..num_coeffs {
        let next = scaled.matrix().dot(&stack[k - 1]) * two - &stack[k - 2];
        stack.push(next);
    }
    Ok(stack)
}

/// L2-regularized partial correlation of a multivariate timeseries.
///
/// Centers each variable, forms the empirical covariance with divisor T-1,
/// inverts the ridge-regularized covariance, and converts the precision
/// matrix to partial correlations with a zeroed diagonal. Off-diagonal
/// entries are clamped to [-1, 1] to absorb rounding at the boundary.
pub fn partial_correlation<T: Scalar>(ts: &TimeseriesMatrix<T>, rho: T) -> Result<Array2<T>> {
    if !(rho.is_finite() && rho >= T::zero()) {
        return Err(Error::InvalidInput(format!(
            "regularization rho must be non-negative and finite, got {rho}"
        )));
    }
    let t = ts.num_observations();
    let d = ts.num_variables();
    let data = ts.data();

    // Covariance with columns centered, divisor T-1.
    let mut centered = data.clone();
    for mut col in centered.columns_mut() {
        let mean = col.iter().copied().sum::<T>() / cast::<T>(t as f64);
        col.mapv_inplace(|x| x - mean);
    }
    let mut sigma = centered.t().dot(&centered) / cast::<T>((t - 1) as f64);
    for i in 0..d {
        sigma[[i, i]] += rho;
    }

    let precision = cholesky_inverse(&sigma).map_err(|_| {
        Error::Numerical("regularized covariance (sigma + rho I) is singular".into())
    })?;

    let mut partial = Array2::zeros((d, d));
    for i in 0..d {
        for j in (i + 1)..d {
            let denom = (precision[[i, i]] * precision[[j, j]]).sqrt();
            let value = (-precision[[i, j]] / denom)
                .max(-T::one())
                .min(T::one());
            partial[[i, j]] = value;
            partial[[j, i]] = value;
        }
    }
    Ok(partial)
}

/// Inverse of a symmetric positive-definite matrix via Cholesky factorization.
/// Fails when a pivot is non-positive, i.e. the matrix is not PD.
fn cholesky_inverse<T: Scalar>(matrix: &Array2<T>) -> std::result::Result<Array2<T>, ()> {
    let n = matrix.nrows();
    let mut lower = Array2::<T>::zeros((n, n));
    for j in 0..n {
        let mut diag = matrix[[j, j]];
        for k in 0..j {
            diag = diag - lower[[j, k]] * lower[[j, k]];
        }
        if !(diag.is_finite() && diag > T::zero()) {
            return Err(());
        }
        let pivot = diag.sqrt();
        lower[[j, j]] = pivot;
        for i in (j + 1)..n {
            let mut sum = matrix[[i, j]];
            for k in 0..j {
                sum = sum - lower[[i, k]] * lower[[j, k]];
            }
            lower[[i, j]] = sum / pivot;
        }
    }

    // Solve L L^T X = I column by column.
    let mut inverse = Array2::<T>::zeros((n, n));
    for col in 0..n {
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut sum = if i == col { T::one() } else { T::zero() };
            for k in 0..i {
                sum = sum - lower[[i, k]] * y[k];
            }
            y[i] = sum / lower[[i, i]];
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut sum = y[i];
            for k in (i + 1)..n {
                sum = sum - lower[[k, i]] * x[k];
            }
            x[i] = sum / lower[[i, i]];
        }
        for i in 0..n {
            inverse[[i, col]] = x[i];
        }
    }
    Ok(inverse)
}

/// Build a group-level graph from per-subject connectomes.
///
/// The adjacency is the element-wise mean of the absolute connectivity
/// values with a zeroed diagonal. When `knn` is given, each row keeps only
/// its `knn` largest entries (ties broken toward smaller column index) and
/// the result is re-symmetrized by element-wise maximum.
pub fn build_group_graph<T: Scalar>(
    connectomes: &[Array2<T>],
    knn: Option<usize>,
) -> Result<Graph<T>> {
    let first = connectomes.first().ok_or_else(|| {
        Error::InvalidInput("build_group_graph needs at least one connectome".into())
    })?;
    let d = first.nrows();
    let sym_tol = cast::<T>(1e-9);
    for (idx, m) in connectomes.iter().enumerate() {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch {
                context: format!("connectome {idx}"),
                expected: format!("{d}x{d}"),
                actual: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        for ((i, j), &x) in m.indexed_iter() {
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("connectome {idx}[{i},{j}]"),
                });
            }
            if i < j && (x - m[[j, i]]).abs() > sym_tol {
                return Err(Error::InvalidInput(format!(
                    "connectome {idx} is not symmetric at [{i},{j}]"
                )));
            }
        }
    }
    if let Some(k) = knn {
        if k >= d {
            return Err(Error::InvalidInput(format!(
                "knn ({k}) must be smaller than the node count ({d})"
            )));
        }
    }

    let count = cast::<T>(connectomes.len() as f64);
    let two = cast::<T>(2.0);
    let mut weights = Array2::<T>::zeros((d, d));
    for i in 0..d {
        for j in (i + 1)..d {
            let mut sum = T::zero();
            for m in connectomes {
                // Average the two triangles so the mean is exactly symmetric.
                sum += (m[[i, j]].abs() + m[[j, i]].abs()) / two;
            }
            let value = sum / count;
            weights[[i, j]] = value;
            weights[[j, i]] = value;
        }
    }

    if let Some(k) = knn {
        let mut kept = Array2::<T>::zeros((d, d));
        for i in 0..d {
            let mut entries: Vec<(usize, T)> = (0..d)
                .filter(|&j| j != i)
                .map(|j| (j, weights[[i, j]]))
                .collect();
            entries.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .expect("finite weights")
                    .then(a.0.cmp(&b.0))
            });
            for &(j, value) in entries.iter().take(k) {
                kept[[i, j]] = value;
            }
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let value = kept[[i, j]].max(kept[[j, i]]);
                weights[[i, j]] = value;
                weights[[j, i]] = value;
            }
        }
        if k == 0 {
            weights.fill(T::zero());
        }
    }

    Graph::new(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn unit_edge_graph() -> Graph<f64> {
        Graph::new(array![[0.0, 1.0], [1.0, 0.0]]).unwrap()
    }

    #[test]
    fn graph_rejects_asymmetry_negativity_and_diagonal() {
        assert!(Graph::new(array![[0.0, 1.0], [0.5, 0.0]]).is_err());
        assert!(Graph::new(array![[0.0, -1.0], [-1.0, 0.0]]).is_err());
        assert!(Graph::new(array![[1.0, 1.0], [1.0, 0.0]]).is_err());
        assert!(Graph::new(array![[0.0]]).is_err());
        assert!(Graph::new(array![[0.0, f64::NAN], [f64::NAN, 0.0]]).is_err());
    }

    #[test]
    fn laplacian_of_unit_edge_is_i_minus_w() {
        let l = normalized_laplacian(&unit_edge_graph());
        assert_eq!(l, array![[1.0, -1.0], [-1.0, 1.0]]);
    }

    #[test]
    fn laplacian_of_empty_graph_is_identity() {
        let g = Graph::new(Array2::<f64>::zeros((3, 3))).unwrap();
        let l = normalized_laplacian(&g);
        assert_eq!(l, Array2::<f64>::eye(3));
    }

    #[test]
    fn lambda_of_identity_is_one() {
        let (lambda, converged) = estimate_lambda_max(&Array2::<f64>::eye(2), 1e-7, 1000);
        assert!(converged);
        assert!((lambda - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lambda_of_unit_edge_graph_is_two() {
        let l = normalized_laplacian(&unit_edge_graph());
        let (lambda, converged) = estimate_lambda_max(&l, 1e-7, 1000);
        assert!(converged);
        assert!((lambda - 2.0).abs() < 1e-9);
    }

    #[test]
    fn non_convergence_falls_back_to_upper_bound() {
        // Eigenvalue gap of 5e-4: the Rayleigh quotient cannot settle to
        // 1e-12 within three iterations.
        let m = array![[2.0, 0.0], [0.0, 1.999]];
        let (lambda, converged) = estimate_lambda_max(&m, 1e-12, 3);
        assert!(!converged);
        assert_eq!(lambda, 2.0);
    }

    #[test]
    fn scaling_identity_with_lambda_two_gives_zero() {
        let scaled = scale_laplacian(&Array2::<f64>::eye(3), 2.0).unwrap();
        assert_eq!(scaled.matrix(), &Array2::<f64>::zeros((3, 3)));
        assert!(scaled.converged());
    }

    #[test]
    fn scaling_with_lambda_two_subtracts_identity() {
        let l = normalized_laplacian(&unit_edge_graph());
        let scaled = scale_laplacian(&l, 2.0).unwrap();
        assert_eq!(scaled.matrix(), &(&l - &Array2::<f64>::eye(2)));
    }

    #[test]
    fn scaling_rejects_non_positive_lambda() {
        assert!(scale_laplacian(&Array2::<f64>::eye(2), 0.0).is_err());
        assert!(scale_laplacian(&Array2::<f64>::eye(2), -1.0).is_err());
        assert!(scale_laplacian(&Array2::<f64>::eye(2), f64::NAN).is_err());
    }

    #[test]
    fn chebyshev_stack_first_two_terms() {
        let scaled = ScaledLaplacian::from_graph(&unit_edge_graph()).unwrap();
        let x = array![[1.0, 2.0], [3.0, 4.0]];
        let stack = chebyshev_stack(&scaled, &x, 1).unwrap();
        assert_eq!(stack.len(), 1);
        assert_eq!(stack[0], x);

        let stack = chebyshev_stack(&scaled, &x, 2).unwrap();
        assert_eq!(stack[1], scaled.matrix().dot(&x));
    }

    #[test]
    fn chebyshev_stack_rejects_mismatched_signals() {
        let scaled = ScaledLaplacian::from_graph(&unit_edge_graph()).unwrap();
        let x = Array2::<f64>::zeros((3, 2));
        assert!(chebyshev_stack(&scaled, &x, 3).is_err());
        assert!(chebyshev_stack(&scaled, &Array2::<f64>::zeros((2, 1)), 0).is_err());
    }

    #[test]
    fn from_graph_reports_convergence_and_spectrum() {
        let scaled = ScaledLaplacian::from_graph(&unit_edge_graph()).unwrap();
        assert!(scaled.converged());
        assert!((scaled.lambda_max() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn partial_correlation_of_single_variable_is_zero() {
        let ts = TimeseriesMatrix::new(array![[1.0], [2.0], [0.5]]).unwrap();
        let p = partial_correlation(&ts, 0.1).unwrap();
        assert_eq!(p, Array2::<f64>::zeros((1, 1)));
    }

    #[test]
    fn partial_correlation_rejects_bad_inputs() {
        assert!(TimeseriesMatrix::new(array![[1.0, 2.0]]).is_err());
        let ts = TimeseriesMatrix::new(array![[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(partial_correlation(&ts, -0.1).is_err());
    }

    #[test]
    fn partial_correlation_flags_singular_covariance() {
        // Two identical variables: covariance is rank one, not invertible at rho = 0.
        let ts = TimeseriesMatrix::new(array![
            [1.0, 1.0],
            [2.0, 2.0],
            [3.0, 3.0],
            [-1.0, -1.0]
        ])
        .unwrap();
        match partial_correlation(&ts, 0.0) {
            Err(Error::Numerical(message)) => assert!(message.contains("covariance")),
            other => panic!("expected numerical error, got {other:?}"),
        }
    }

    #[test]
    fn group_graph_of_single_input_is_abs_with_zero_diagonal() {
        let m = array![[0.9, -0.5], [-0.5, 0.9]];
        let g = build_group_graph(&[m], None).unwrap();
        assert_eq!(g.weights(), &array![[0.0, 0.5], [0.5, 0.0]]);
    }

    #[test]
    fn group_graph_takes_abs_before_averaging() {
        let m = array![[0.0, 0.7], [0.7, 0.0]];
        let neg = m.mapv(|x: f64| -x);
        let g = build_group_graph(&[m.clone(), neg], None).unwrap();
        assert_eq!(g.weights(), &m);
    }

    #[test]
    fn group_graph_rejects_oversized_knn() {
        let m = Array2::<f64>::zeros((3, 3));
        assert!(build_group_graph(&[m], Some(3)).is_err());
    }

    #[test]
    fn knn_sparsification_keeps_rows_covered_and_symmetric() {
        // Dense 5-node connectome with distinct weights.
        let mut m = Array2::<f64>::zeros((5, 5));
        let mut v = 0.1;
        for i in 0..5 {
            for j in (i + 1)..5 {
                m[[i, j]] = v;
                m[[j, i]] = v;
                v += 0.07;
            }
        }
        let g = build_group_graph(&[m], Some(2)).unwrap();
        let w = g.weights();
        for i in 0..5 {
            let nonzeros = (0..5).filter(|&j| w[[i, j]] != 0.0).count();
            assert!(nonzeros >= 2, "row {i} has {nonzeros} nonzeros");
        }
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(w[[i, j]], w[[j, i]]);
            }
        }
    }
}
