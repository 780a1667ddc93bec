//! Orthogonal matching pursuit.
//!
//! Each iteration picks the dictionary column with the largest absolute
//! correlation against the current residual, then removes the residual's
//! component along that column. The selected columns are orthogonalized
//! incrementally (modified Gram-Schmidt with one re-orthogonalization pass),
//! so an iteration costs one `m x M` correlation scan plus `O(m k)` for the
//! update. The final coefficients come from back substitution on the
//! triangular factor, or from a minimum-norm solve when the support turned
//! out to be linearly dependent.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Residual norms at or below this are treated as exactly zero. Used when
/// the caller asks for `epsilon = 0`.
pub const ZERO_RESIDUAL: f64 = 1e-12;

/// Correlations within this relative distance of the maximum count as tied;
/// the smallest index wins.
pub const TIE_RTOL: f64 = 1e-12;

/// Relative size below which a freshly orthogonalized column is considered
/// dependent on the columns already selected.
const DEPENDENT_RTOL: f64 = 1e-10;

const UNIT_NORM_TOL: f64 = 1e-8;

/// A column dictionary `A = [a_1, ..., a_M]` in `R^m`.
///
/// Besides the column-major matrix, a row-major copy is kept so the
/// correlation scan `A^T q` streams through contiguous memory.
#[derive(Debug, Clone)]
pub struct Dictionary {
    columns: DMatrix<f64>,
    rows: Vec<f64>,
    normalized: bool,
}

impl Dictionary {
    /// Wraps a matrix whose columns all have unit norm (within 1e-8).
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        for (j, col) in columns.column_iter().enumerate() {
            let norm = col.norm();
            ensure!(
                (norm - 1.0).abs() <= UNIT_NORM_TOL,
                "dictionary column {j} has norm {norm}, expected unit norm"
            );
        }
        Self::build(columns, true)
    }

    /// Wraps a matrix without checking column norms.
    pub fn unnormalized(columns: DMatrix<f64>) -> Result<Self> {
        Self::build(columns, false)
    }

    fn build(columns: DMatrix<f64>, normalized: bool) -> Result<Self> {
        let (m, n) = columns.shape();
        ensure!(m >= 1 && n >= 1, "dictionary must be non-empty, got {m}x{n}");
        ensure!(
            columns.iter().all(|v| v.is_finite()),
            "dictionary contains non-finite entries"
        );
        let mut rows = vec![0.0; m * n];
        for j in 0..n {
            for r in 0..m {
                rows[r * n + j] = columns[(r, j)];
            }
        }
        Ok(Self { columns, rows, normalized })
    }

    /// Ambient dimension `m`.
    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    /// Number of columns `M`.
    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &[f64] {
        let m = self.dim();
        &self.columns.as_slice()[i * m..(i + 1) * m]
    }

    /// Writes `A^T q` into `out`, summing over rows in order.
    pub(crate) fn correlate(&self, q: &[f64], out: &mut Vec<f64>) {
        let n = self.len();
        out.clear();
        out.resize(n, 0.0);
        for (r, &qr) in q.iter().enumerate() {
            let row = &self.rows[r * n..(r + 1) * n];
            for (o, &x) in out.iter_mut().zip(row) {
                *o += qr * x;
            }
        }
    }

    /// `A^T q` for several residuals at once. Columns are processed in blocks
    /// so each block of the dictionary is read once for the whole batch; the
    /// summation order per entry matches [`Dictionary::correlate`].
    pub(crate) fn correlate_many(&self, qs: &[&[f64]], out: &mut Vec<Vec<f64>>) {
        const BLOCK: usize = 2048;
        let n = self.len();
        let m = self.dim();
        out.resize_with(qs.len().max(out.len()), Vec::new);
        for o in out.iter_mut().take(qs.len()) {
            o.clear();
            o.resize(n, 0.0);
        }
        for start in (0..n).step_by(BLOCK) {
            let end = (start + BLOCK).min(n);
            for (q, o) in qs.iter().zip(out.iter_mut()) {
                let o = &mut o[start..end];
                for (r, &qr) in q.iter().enumerate().take(m) {
                    let row = &self.rows[r * n + start..r * n + end];
                    for (o, &x) in o.iter_mut().zip(row) {
                        *o += qr * x;
                    }
                }
            }
        }
    }
}

/// Stopping rule of the greedy loop: at most `k_max` selections, stop once
/// the residual norm is at most `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmpParams {
    pub k_max: usize,
    pub epsilon: f64,
}

impl OmpParams {
    pub fn new(k_max: usize, epsilon: f64) -> Self {
        Self { k_max, epsilon }
    }

    /// Residual threshold actually used: `epsilon = 0` means numerically zero.
    pub fn effective_epsilon(&self) -> f64 {
        self.epsilon.max(ZERO_RESIDUAL)
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.k_max >= 1, "k_max must be at least 1");
        ensure!(
            self.epsilon >= 0.0 && self.epsilon.is_finite(),
            "epsilon must be a nonnegative finite number, got {}",
            self.epsilon
        );
        Ok(())
    }
}

/// Sparse vector of length `len` with nonzeros only at `indices`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCoefficients {
    pub len: usize,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseCoefficients {
    pub fn zeros(len: usize) -> Self {
        Self { len, indices: Vec::new(), values: Vec::new() }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.indices
            .iter()
            .position(|&k| k == i)
            .map_or(0.0, |p| self.values[p])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn to_dense(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.len);
        for (i, x) in self.iter() {
            v[i] = x;
        }
        v
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }
}

/// Record of one pursuit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OmpTrace {
    /// Selected column indices in selection order.
    pub support: Vec<usize>,
    /// Residuals `q_0 = b, q_1, ..., q_k*`.
    pub residuals: Vec<Vec<f64>>,
    /// Number of selections performed.
    pub iterations: usize,
    /// Set when the selected columns were linearly dependent and the final
    /// fit fell back to a minimum-norm solution.
    pub rank_deficient: bool,
}

impl OmpTrace {
    pub fn residual_norms(&self) -> Vec<f64> {
        self.residuals.iter().map(|q| norm(q)).collect()
    }
}

/// Result of [`least_squares_on_support`].
#[derive(Debug, Clone, PartialEq)]
pub struct SupportFit {
    pub coefficients: SparseCoefficients,
    pub rank_deficient: bool,
}

/// Greedy sparse approximation of `target` by the columns of `dict`.
pub fn omp(
    dict: &Dictionary,
    target: &[f64],
    params: OmpParams,
) -> Result<(SparseCoefficients, OmpTrace)> {
    params.validate()?;
    ensure!(
        target.len() == dict.dim(),
        "target has dimension {} but the dictionary has {} rows",
        target.len(),
        dict.dim()
    );
    let mut scratch = Vec::new();
    let out = pursue(dict, target, params, None, true, &mut scratch);
    let trace = OmpTrace {
        iterations: out.support.len(),
        support: out.support,
        residuals: out.residuals,
        rank_deficient: out.rank_deficient,
    };
    Ok((out.coefficients, trace))
}

/// Least-squares fit of `target` using only the columns in `support`.
pub fn least_squares_on_support(
    dict: &Dictionary,
    target: &[f64],
    support: &[usize],
) -> Result<SupportFit> {
    ensure!(
        target.len() == dict.dim(),
        "target has dimension {} but the dictionary has {} rows",
        target.len(),
        dict.dim()
    );
    for (p, &i) in support.iter().enumerate() {
        ensure!(i < dict.len(), "support index {i} out of range for {} columns", dict.len());
        ensure!(!support[..p].contains(&i), "support index {i} repeated");
    }
    let (values, rank_deficient) = min_norm_fit(dict, target, support);
    Ok(SupportFit {
        coefficients: SparseCoefficients {
            len: dict.len(),
            indices: support.to_vec(),
            values,
        },
        rank_deficient,
    })
}

pub(crate) struct Pursuit {
    pub coefficients: SparseCoefficients,
    pub support: Vec<usize>,
    pub residuals: Vec<Vec<f64>>,
    pub rank_deficient: bool,
}

/// State of one greedy loop between correlation scans.
struct PursuitState<'a> {
    target: &'a [f64],
    exclude: Option<usize>,
    max_iter: usize,
    eps: f64,
    record: bool,
    q: Vec<f64>,
    residuals: Vec<Vec<f64>>,
    support: Vec<usize>,
    // Orthonormal basis of the span of independent selected columns, and the
    // triangular factor: column p of `r_cols` expresses selection p in it.
    basis: Vec<Vec<f64>>,
    r_cols: Vec<Vec<f64>>,
    rank_deficient: bool,
    done: bool,
}

impl<'a> PursuitState<'a> {
    fn new(dict: &Dictionary, target: &'a [f64], params: OmpParams, exclude: Option<usize>, record: bool) -> Self {
        let available = dict.len() - usize::from(exclude.is_some());
        let q = target.to_vec();
        let mut state = Self {
            target,
            exclude,
            max_iter: params.k_max.min(available),
            eps: params.effective_epsilon(),
            record,
            residuals: if record { vec![q.clone()] } else { Vec::new() },
            q,
            support: Vec::new(),
            basis: Vec::new(),
            r_cols: Vec::new(),
            rank_deficient: false,
            done: false,
        };
        state.check_stop();
        state
    }

    fn check_stop(&mut self) {
        self.done = self.done || self.support.len() >= self.max_iter || norm(&self.q) <= self.eps;
    }

    /// One selection and update, given `A^T q` for the current residual.
    fn advance(&mut self, dict: &Dictionary, scores: &mut [f64]) {
        if let Some(j) = self.exclude {
            scores[j] = f64::NAN;
        }
        for &s in &self.support {
            scores[s] = f64::NAN;
        }
        let Some(pick) = select(scores) else {
            self.done = true;
            return;
        };
        self.support.push(pick);

        let mut v = dict.column(pick).to_vec();
        let col_norm = norm(&v);
        let mut coords = vec![0.0; self.basis.len()];
        for _ in 0..2 {
            for (u, c) in self.basis.iter().zip(coords.iter_mut()) {
                let d = dot(u, &v);
                *c += d;
                axpy(-d, u, &mut v);
            }
        }
        let v_norm = norm(&v);
        if v_norm > DEPENDENT_RTOL * col_norm.max(f64::MIN_POSITIVE) {
            v.iter_mut().for_each(|x| *x /= v_norm);
            coords.push(v_norm);
            let d = dot(&v, &self.q);
            axpy(-d, &v, &mut self.q);
            self.basis.push(v);
            // Clean up drift so q stays orthogonal to every selected column.
            for u in &self.basis {
                let d = dot(u, &self.q);
                axpy(-d, u, &mut self.q);
            }
        } else {
            self.rank_deficient = true;
        }
        self.r_cols.push(coords);
        if self.record {
            self.residuals.push(self.q.clone());
        }
        // Once the span is the whole space, what is left of q is rounding.
        self.done = self.basis.len() == dict.dim();
        self.check_stop();
    }

    fn finish(self, dict: &Dictionary) -> Pursuit {
        let values = if self.rank_deficient {
            min_norm_fit(dict, self.target, &self.support).0
        } else {
            back_substitute(&self.basis, &self.r_cols, self.target)
        };
        Pursuit {
            coefficients: SparseCoefficients {
                len: dict.len(),
                indices: self.support.clone(),
                values,
            },
            support: self.support,
            residuals: self.residuals,
            rank_deficient: self.rank_deficient,
        }
    }
}

/// Shared pursuit loop. `exclude` removes one column from consideration
/// (self-expression), `record` keeps every residual.
pub(crate) fn pursue(
    dict: &Dictionary,
    target: &[f64],
    params: OmpParams,
    exclude: Option<usize>,
    record: bool,
    scratch: &mut Vec<f64>,
) -> Pursuit {
    let mut state = PursuitState::new(dict, target, params, exclude, record);
    while !state.done {
        dict.correlate(&state.q, scratch);
        state.advance(dict, scratch);
    }
    state.finish(dict)
}

/// Self-expressive pursuits of the dictionary's own columns `points`, run in
/// lockstep so that each iteration scans the dictionary once for the whole
/// batch. Results equal `pursue` with `exclude = Some(j)` bit for bit.
pub(crate) fn pursue_columns(
    dict: &Dictionary,
    points: std::ops::Range<usize>,
    params: OmpParams,
    scratch: &mut Vec<Vec<f64>>,
) -> Vec<Pursuit> {
    let mut states: Vec<PursuitState> = points
        .map(|j| PursuitState::new(dict, dict.column(j), params, Some(j), false))
        .collect();
    loop {
        let active: Vec<usize> = (0..states.len()).filter(|&b| !states[b].done).collect();
        if active.is_empty() {
            break;
        }
        let qs: Vec<&[f64]> = active.iter().map(|&b| states[b].q.as_slice()).collect();
        dict.correlate_many(&qs, scratch);
        for (slot, &b) in active.iter().enumerate() {
            states[b].advance(dict, &mut scratch[slot]);
        }
    }
    states.into_iter().map(|s| s.finish(dict)).collect()
}

/// Index of the largest `|score|`, smallest index among near-ties. NaN
/// entries are skipped.
fn select(scores: &[f64]) -> Option<usize> {
    // Independent lanes let the compiler vectorize; `a > m` skips NaN.
    let mut lanes = [f64::NEG_INFINITY; 4];
    let chunks = scores.chunks_exact(4);
    let tail = chunks.remainder();
    for c in chunks {
        for (m, v) in lanes.iter_mut().zip(c) {
            let a = v.abs();
            *m = if a > *m { a } else { *m };
        }
    }
    for v in tail {
        let a = v.abs();
        lanes[0] = if a > lanes[0] { a } else { lanes[0] };
    }
    let best = lanes.iter().fold(f64::NEG_INFINITY, |m, &v| if v > m { v } else { m });
    if !best.is_finite() {
        return None;
    }
    let floor = best - TIE_RTOL * best;
    scores.iter().position(|v| v.abs() >= floor)
}

/// Solves `R c = Q^T b` for the upper-triangular factor built during pursuit.
fn back_substitute(basis: &[Vec<f64>], r_cols: &[Vec<f64>], target: &[f64]) -> Vec<f64> {
    let k = basis.len();
    let z: Vec<f64> = basis.iter().map(|u| dot(u, target)).collect();
    let mut c = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = z[i];
        for p in i + 1..k {
            s -= r_cols[p][i] * c[p];
        }
        c[i] = s / r_cols[i][i];
    }
    c
}

/// Minimum-norm least squares on the given columns via SVD. Returns the
/// coefficients and whether the columns were numerically dependent.
fn min_norm_fit(dict: &Dictionary, target: &[f64], support: &[usize]) -> (Vec<f64>, bool) {
    if support.is_empty() {
        return (Vec::new(), false);
    }
    let m = dict.dim();
    let sub = DMatrix::from_fn(m, support.len(), |r, c| dict.column(support[c])[r]);
    let b = DVector::from_column_slice(target);
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * DEPENDENT_RTOL;
    let deficient = support.len() > m || svd.singular_values.iter().any(|&s| s <= tol);
    let x = match svd.solve(&b, tol) {
        Ok(x) => x,
        Err(_) => return (vec![0.0; support.len()], true),
    };
    (x.iter().copied().collect(), deficient)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn dict(cols: &[&[f64]]) -> Dictionary {
        let m = cols[0].len();
        let data: Vec<f64> = cols.iter().flat_map(|c| c.iter().copied()).collect();
        Dictionary::unnormalized(DMatrix::from_column_slice(m, cols.len(), &data)).unwrap()
    }

    fn plane_example() -> Dictionary {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        dict(&[&[1.0, 0.0], &[0.0, 1.0], &[s, s]])
    }

    #[test]
    fn target_equal_to_a_column() {
        let d = dict(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let (c, trace) = omp(&d, &[0.0, 1.0, 0.0], OmpParams::new(2, 0.0)).unwrap();
        assert_eq!(c.to_dense().as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(trace.iterations, 1);
        assert_eq!(trace.support, vec![1]);
        assert!(norm(&trace.residuals[1]) == 0.0);
    }

    #[test]
    fn tie_goes_to_smallest_index() {
        let (c, trace) = omp(&plane_example(), &[0.8, 0.6], OmpParams::new(2, 0.0)).unwrap();
        assert_eq!(trace.support, vec![2, 0]);
        assert_abs_diff_eq!(trace.residuals[1][0], 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(trace.residuals[1][1], -0.1, epsilon = 1e-12);
        let dense = c.to_dense();
        assert_abs_diff_eq!(dense[0], 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(dense[1], 0.0);
        assert_abs_diff_eq!(dense[2], 0.6 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn support_fit_examples() {
        let d = plane_example();
        let fit = least_squares_on_support(&d, &[0.8, 0.6], &[0, 2]).unwrap();
        assert!(!fit.rank_deficient);
        assert_abs_diff_eq!(fit.coefficients.get(0), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients.get(2), 0.848_528_137_423_857, epsilon = 1e-12);

        let fit = least_squares_on_support(&d, &[0.0, 1.0], &[1]).unwrap();
        assert_abs_diff_eq!(fit.coefficients.get(1), 1.0, epsilon = 1e-12);

        let fit = least_squares_on_support(&d, &[0.3, 0.4], &[]).unwrap();
        assert_eq!(fit.coefficients.nnz(), 0);
    }

    #[test]
    fn dependent_support_gets_min_norm_solution() {
        let d = dict(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let fit = least_squares_on_support(&d, &[1.0, 0.0], &[0, 1]).unwrap();
        assert!(fit.rank_deficient);
        assert_abs_diff_eq!(fit.coefficients.get(0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.coefficients.get(1), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn contract_errors() {
        let d = plane_example();
        assert!(matches!(omp(&d, &[1.0], OmpParams::new(1, 0.0)), Err(Error::Contract(_))));
        assert!(matches!(omp(&d, &[1.0, 0.0], OmpParams::new(0, 0.0)), Err(Error::Contract(_))));
        assert!(Dictionary::unnormalized(DMatrix::zeros(2, 0)).is_err());
        assert!(Dictionary::new(DMatrix::from_column_slice(2, 1, &[2.0, 0.0])).is_err());
        assert!(least_squares_on_support(&d, &[1.0, 0.0], &[0, 0]).is_err());
        assert!(least_squares_on_support(&d, &[1.0, 0.0], &[3]).is_err());
    }

    #[test]
    fn exhausts_small_dictionary() {
        // Target outside the span: the loop must stop when columns run out.
        let d = dict(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let (c, trace) = omp(&d, &[0.6, 0.0, 0.8], OmpParams::new(10, 0.0)).unwrap();
        assert_eq!(trace.iterations, 2);
        assert_abs_diff_eq!(c.get(0), 0.6, epsilon = 1e-15);
        assert_eq!(c.get(1), 0.0);
    }

    /// Brute-force selection: full scan, smallest index among near-ties.
    fn brute_force_pick(d: &Dictionary, q: &[f64], taken: &[usize]) -> usize {
        let scores: Vec<f64> = (0..d.len())
            .map(|i| {
                let mut s = 0.0;
                for (r, &qr) in q.iter().enumerate() {
                    s += qr * d.column(i)[r];
                }
                s.abs()
            })
            .collect();
        let best = (0..d.len())
            .filter(|i| !taken.contains(i))
            .map(|i| scores[i])
            .fold(f64::NEG_INFINITY, f64::max);
        (0..d.len())
            .find(|i| !taken.contains(i) && scores[*i] >= best - TIE_RTOL * best)
            .unwrap()
    }

    fn arb_problem() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>)> {
        (1usize..=5, 1usize..=6).prop_flat_map(|(m, n)| {
            (
                Just(m),
                Just(n),
                prop::collection::vec(-1.0f64..1.0, m * n),
                prop::collection::vec(-1.0f64..1.0, m),
            )
        })
    }

    #[test]
    fn batched_pursuits_match_single_ones() {
        let mut r = crate::seed::rng(3);
        let mut mat = DMatrix::from_fn(4, 2100, |_, _| rand::Rng::gen_range(&mut r, -1.0..1.0));
        for mut col in mat.column_iter_mut() {
            let nrm = col.norm();
            col /= nrm;
        }
        let d = Dictionary::new(mat).unwrap();
        for params in [OmpParams::new(3, 1e-3), OmpParams::new(10, 0.0)] {
            let mut scratch = Vec::new();
            let batch = pursue_columns(&d, 2090..2100, params, &mut scratch);
            for (p, j) in batch.iter().zip(2090..2100) {
                let single = pursue(&d, d.column(j), params, Some(j), false, &mut Vec::new());
                assert_eq!(p.support, single.support);
                assert_eq!(p.coefficients, single.coefficients);
            }
        }
    }

    proptest! {
        #[test]
        fn trace_invariants((m, n, entries, target) in arb_problem(), k_max in 1usize..8) {
            prop_assume!(target.iter().any(|v| v.abs() > 1e-3));
            let mut mat = DMatrix::from_column_slice(m, n, &entries);
            for mut col in mat.column_iter_mut() {
                let nrm = col.norm();
                prop_assume!(nrm > 1e-3);
                col /= nrm;
            }
            let d = Dictionary::new(mat).unwrap();
            let (c, trace) = omp(&d, &target, OmpParams::new(k_max, 0.0)).unwrap();

            prop_assert!(trace.iterations <= k_max.min(m).min(n));
            let mut sorted = trace.support.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), trace.support.len());
            prop_assert!(c.nnz() <= k_max);
            prop_assert!(c.indices.iter().all(|i| trace.support.contains(i)));

            let norms = trace.residual_norms();
            for w in norms.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12);
            }
            for (k, q) in trace.residuals.iter().enumerate().skip(1) {
                for &s in &trace.support[..k] {
                    prop_assert!(dot(q, d.column(s)).abs() <= 1e-8);
                }
            }
            // Greedy-trace equivalence against a brute-force scan.
            for (k, &s) in trace.support.iter().enumerate() {
                let pick = brute_force_pick(&d, &trace.residuals[k], &trace.support[..k]);
                prop_assert_eq!(pick, s);
            }
            // Final fit is the least-squares solution on the support.
            let resid: Vec<f64> = {
                let dense = c.to_dense();
                let fit = d.matrix() * dense;
                target.iter().zip(fit.iter()).map(|(b, f)| b - f).collect()
            };
            for &s in &trace.support {
                prop_assert!(dot(&resid, d.column(s)).abs() <= 1e-8);
            }
            // Determinism.
            let again = omp(&d, &target, OmpParams::new(k_max, 0.0)).unwrap();
            prop_assert_eq!(again.0, c);
        }
    }
}
