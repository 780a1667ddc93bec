//! Self-expressive coefficients and the affinity graph built from them.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::omp::{pursue_columns, Dictionary, OmpParams, Pursuit, SparseCoefficients};

const UNIT_NORM_TOL: f64 = 1e-8;

/// Data points stored as unit-norm columns, with optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: DMatrix<f64>,
    labels: Option<Vec<usize>>,
}

impl Dataset {
    /// Wraps points that are already unit-norm.
    pub fn new(points: DMatrix<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        for (j, col) in points.column_iter().enumerate() {
            let norm = col.norm();
            ensure!(
                (norm - 1.0).abs() <= UNIT_NORM_TOL,
                "point {j} has norm {norm}; use Dataset::normalized for raw data"
            );
        }
        Self::checked(points, labels)
    }

    /// Scales every column to unit norm. Zero columns are rejected.
    pub fn normalized(mut points: DMatrix<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        for (j, mut col) in points.column_iter_mut().enumerate() {
            let norm = col.norm();
            ensure!(norm.is_finite(), "column {j} contains non-finite values");
            ensure!(norm > 0.0, "zero-norm column {j} cannot be normalized");
            col /= norm;
        }
        Self::checked(points, labels)
    }

    fn checked(points: DMatrix<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        ensure!(points.nrows() >= 1, "points must have at least one coordinate");
        if let Some(l) = &labels {
            ensure!(
                l.len() == points.ncols(),
                "{} labels given for {} points",
                l.len(),
                points.ncols()
            );
        }
        Ok(Self { points, labels })
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        ensure!(
            labels.len() == self.len(),
            "{} labels given for {} points",
            labels.len(),
            self.len()
        );
        self.labels = Some(labels);
        Ok(self)
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.points.nrows()
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of distinct ground-truth groups (`max label + 1`).
    pub fn n_groups(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l.iter().max().map_or(0, |m| m + 1))
    }

    pub fn point(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.points.as_slice()[j * d..(j + 1) * d]
    }

    /// Indices of the points carrying `label`.
    pub fn members(&self, label: usize) -> Vec<usize> {
        self.labels
            .as_ref()
            .map(|l| (0..l.len()).filter(|&j| l[j] == label).collect())
            .unwrap_or_default()
    }

    /// Matrix of the selected columns, in the given order.
    pub fn columns(&self, idx: &[usize]) -> DMatrix<f64> {
        self.points.select_columns(idx)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    Sparse(Vec<SparseCoefficients>),
    Dense(DMatrix<f64>),
}

/// Square self-expression matrix `C`; column `j` represents point `j` and
/// has a zero diagonal entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    n: usize,
    storage: Storage,
}

impl CoefficientMatrix {
    /// Builds from per-column sparse vectors (selection order is kept).
    pub fn from_sparse_columns(columns: Vec<SparseCoefficients>) -> Result<Self> {
        let n = columns.len();
        for (j, c) in columns.iter().enumerate() {
            ensure!(c.len == n, "column {j} has length {} in a {n}x{n} matrix", c.len);
            ensure!(c.indices.iter().all(|&i| i < n), "column {j} has an out-of-range index");
            ensure!(c.get(j) == 0.0, "column {j} has a nonzero diagonal entry");
        }
        Ok(Self { n, storage: Storage::Sparse(columns) })
    }

    pub fn from_dense(c: DMatrix<f64>) -> Result<Self> {
        ensure!(c.is_square(), "coefficient matrix must be square, got {:?}", c.shape());
        ensure!(
            (0..c.nrows()).all(|j| c[(j, j)] == 0.0),
            "coefficient matrix must have a zero diagonal"
        );
        Ok(Self { n: c.nrows(), storage: Storage::Dense(c) })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Nonzero `(row, value)` pairs of column `j`.
    pub fn column(&self, j: usize) -> Vec<(usize, f64)> {
        match &self.storage {
            Storage::Sparse(cols) => cols[j].iter().filter(|(_, v)| *v != 0.0).collect(),
            Storage::Dense(m) => m
                .column(j)
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i, *v))
                .collect(),
        }
    }

    /// Stored support of column `j` in selection order (sparse storage), which
    /// is also the number of pursuit iterations for that point.
    pub fn support(&self, j: usize) -> Vec<usize> {
        match &self.storage {
            Storage::Sparse(cols) => cols[j].indices.clone(),
            Storage::Dense(_) => self.column(j).into_iter().map(|(i, _)| i).collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Sparse(cols) => cols[j].get(i),
            Storage::Dense(m) => m[(i, j)],
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(cols) => {
                let mut m = DMatrix::zeros(self.n, self.n);
                for (j, c) in cols.iter().enumerate() {
                    for (i, v) in c.iter() {
                        m[(i, j)] = v;
                    }
                }
                m
            }
        }
    }

    /// Copy with `f` applied to every column as a dense vector.
    pub fn map_columns(&self, mut f: impl FnMut(usize, &mut [f64])) -> Self {
        let mut m = self.to_dense();
        for j in 0..self.n {
            f(j, m.column_mut(j).as_mut_slice());
        }
        Self { n: self.n, storage: Storage::Dense(m) }
    }
}

/// Points pursued together per dictionary scan.
const BATCH: usize = 16;

/// Runs the pursuit for every point against all other points.
///
/// Column `j` is the pursuit of `x_j` over the dictionary with column `j`
/// skipped; indices stay in the original numbering so no copy of the data
/// is made per point. Batches of columns are solved in parallel and merged
/// by index.
pub fn build_coefficient_matrix(data: &Dataset, params: OmpParams) -> Result<CoefficientMatrix> {
    Ok(build_coefficient_matrix_traced(data, params)?.0)
}

/// Like [`build_coefficient_matrix`], also returning the number of pursuit
/// iterations spent on each point.
pub fn build_coefficient_matrix_traced(
    data: &Dataset,
    params: OmpParams,
) -> Result<(CoefficientMatrix, Vec<usize>)> {
    ensure!(data.len() >= 2, "need at least 2 points, got {}", data.len());
    ensure!(params.k_max >= 1, "k_max must be at least 1");
    ensure!(
        params.epsilon >= 0.0 && params.epsilon.is_finite(),
        "epsilon must be nonnegative"
    );
    let dict = Dictionary::unnormalized(data.points().clone())?;
    let n = data.len();
    let batches: Vec<Vec<Pursuit>> = (0..n.div_ceil(BATCH))
        .into_par_iter()
        .map_init(Vec::new, |scratch, b| {
            pursue_columns(&dict, b * BATCH..((b + 1) * BATCH).min(n), params, scratch)
        })
        .collect();
    let (columns, iterations): (Vec<SparseCoefficients>, Vec<usize>) = batches
        .into_iter()
        .flatten()
        .map(|p| {
            let k = p.support.len();
            (p.coefficients, k)
        })
        .unzip();
    Ok((CoefficientMatrix { n: data.len(), storage: Storage::Sparse(columns) }, iterations))
}

/// Ridge self-expression with the diagonal constrained to zero.
///
/// Column `j` minimizes `||x_j - X c||^2 + lambda ||c||^2` subject to
/// `c_j = 0`. With `P = (X^T X + lambda I)^{-1}` the minimizer has the closed
/// form `c = e_j - P e_j / P_jj`, so one Cholesky factorization serves all
/// columns.
pub fn lsr_coefficients(data: &Dataset, lambda: f64) -> Result<CoefficientMatrix> {
    ensure!(lambda > 0.0 && lambda.is_finite(), "lambda must be positive, got {lambda}");
    let x = data.points();
    let n = x.ncols();
    let mut gram = x.tr_mul(x);
    for i in 0..n {
        gram[(i, i)] += lambda;
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numeric("regularized Gram matrix is not positive definite".into()))?;
    let p = chol.inverse();
    let mut c = DMatrix::zeros(n, n);
    for j in 0..n {
        let pjj = p[(j, j)];
        for i in 0..n {
            if i != j {
                c[(i, j)] = -p[(i, j)] / pjj;
            }
        }
    }
    Ok(CoefficientMatrix { n, storage: Storage::Dense(c) })
}

/// Symmetric nonnegative weight matrix with zero diagonal, stored as
/// compressed sparse rows with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityGraph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl AffinityGraph {
    /// Checks symmetry (exact), nonnegativity and the zero diagonal.
    pub fn from_dense(w: &DMatrix<f64>) -> Result<Self> {
        ensure!(w.is_square(), "affinity must be square, got {:?}", w.shape());
        let n = w.nrows();
        let mut triplets = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let v = w[(i, j)];
                ensure!(v == w[(j, i)], "affinity is not symmetric at ({i}, {j})");
                ensure!(v >= 0.0, "affinity has a negative entry at ({i}, {j})");
                ensure!(i != j || v == 0.0, "affinity has a nonzero diagonal at {i}");
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Ok(Self::from_triplets(n, triplets))
    }

    /// Weighted undirected edges `(i, j, w)` with `i != j`; duplicates are summed.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut triplets = Vec::with_capacity(edges.len() * 2);
        for &(i, j, v) in edges {
            ensure!(i < n && j < n, "edge ({i}, {j}) out of range for {n} vertices");
            ensure!(i != j, "self loop at {i}");
            ensure!(v >= 0.0 && v.is_finite(), "edge weight {v} must be nonnegative");
            triplets.push((i, j, v));
            triplets.push((j, i, v));
        }
        Ok(Self::from_triplets(n, triplets))
    }

    fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Number of stored (directed) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(p) => self.values[range.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.neighbors(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.neighbors(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Subgraph induced by `vertices`, renumbered in the given order.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Self {
        let mut position = std::collections::HashMap::with_capacity(vertices.len());
        for (k, &v) in vertices.iter().enumerate() {
            position.insert(v, k);
        }
        let mut triplets = Vec::new();
        for (a, &v) in vertices.iter().enumerate() {
            for (u, w) in self.neighbors(v) {
                if let Some(&b) = position.get(&u) {
                    triplets.push((a, b, w));
                }
            }
        }
        Self::from_triplets(vertices.len(), triplets)
    }

    /// Connected components of the support of `W` (union-find).
    pub fn components(&self) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for i in 0..self.n {
            for (j, v) in self.neighbors(i) {
                if v > 0.0 {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        (0..self.n).map(|i| find(&mut parent, i)).collect()
    }

    pub fn is_connected(&self) -> bool {
        let roots = self.components();
        roots.iter().all(|&r| r == roots.first().copied().unwrap_or(0))
    }
}

/// `W = |C| + |C^T|`.
pub fn affinity(c: &CoefficientMatrix) -> AffinityGraph {
    let n = c.size();
    let mut triplets = Vec::new();
    for j in 0..n {
        for (i, v) in c.column(j) {
            if i != j {
                triplets.push((i, j, v.abs()));
                triplets.push((j, i, v.abs()));
            }
        }
    }
    AffinityGraph::from_triplets(n, triplets)
}
