//! Normalized spectral clustering and algebraic connectivity.
//!
//! Points are embedded as rows of the eigenvectors belonging to the `n`
//! smallest eigenvalues of `L = I - D^{-1/2} W D^{-1/2}`, rows are scaled to
//! unit length, and k-means groups the rows. Isolated vertices get a zero
//! row of `D^{-1/2}`, so their diagonal entry of `L` is 1 and their
//! embedding row is typically zero; they are reported in the result.

mod eigen;
mod kmeans;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::self_expressive::AffinityGraph;

pub use eigen::{smallest_laplacian_eigenpairs, EigenPath, LowSpectrum};
pub use kmeans::{kmeans, KMeansConfig, KMeansResult};

/// Embedding rows shorter than this are left as zero instead of normalized.
const ZERO_ROW: f64 = 1e-12;

/// Graphs up to this many vertices use the dense eigensolver.
pub const DEFAULT_DENSE_LIMIT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub kmeans: KMeansConfig,
    pub dense_limit: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self { kmeans: KMeansConfig::default(), dense_limit: DEFAULT_DENSE_LIMIT }
    }
}

/// Full spectrum of a normalized Laplacian.
#[derive(Debug, Clone)]
pub struct LaplacianSpectrum {
    /// Ascending.
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    pub n_clusters: usize,
    pub inertia: f64,
    pub seed: u64,
    /// Vertices with zero degree; they sit at the origin of the embedding.
    pub isolated: Vec<usize>,
    pub eigen_path: EigenPath,
}

/// Dense `L = I - D^{-1/2} W D^{-1/2}`.
pub fn normalized_laplacian(w: &AffinityGraph) -> DMatrix<f64> {
    eigen::dense_laplacian(w)
}

/// Every eigenpair of the normalized Laplacian (dense solve).
pub fn laplacian_spectrum(w: &AffinityGraph) -> Result<LaplacianSpectrum> {
    let (values, vectors) = eigen::dense_symmetric(eigen::dense_laplacian(w))?;
    Ok(LaplacianSpectrum { values, vectors })
}

/// Segments the graph into `n` groups.
pub fn spectral_clustering(
    w: &AffinityGraph,
    n: usize,
    config: &SpectralConfig,
    seed: u64,
) -> Result<ClusteringResult> {
    let size = w.size();
    ensure!(n >= 1 && n <= size, "cluster count {n} must be in [1, {size}]");
    let low = smallest_laplacian_eigenpairs(w, n, config.dense_limit)?;
    let mut rows = vec![0.0; size * n];
    for i in 0..size {
        let row = &mut rows[i * n..(i + 1) * n];
        for (c, r) in row.iter_mut().enumerate() {
            *r = low.vectors[(i, c)];
        }
        let len = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len > ZERO_ROW {
            row.iter_mut().for_each(|v| *v /= len);
        } else {
            row.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let km = kmeans(&rows, n, n, &config.kmeans, seed)?;
    let isolated = w
        .degrees()
        .iter()
        .enumerate()
        .filter(|(_, d)| **d == 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(ClusteringResult {
        labels: km.labels,
        n_clusters: n,
        inertia: km.inertia,
        seed,
        isolated,
        eigen_path: low.path,
    })
}

/// Second-smallest eigenvalue of the normalized Laplacian.
pub fn algebraic_connectivity(w: &AffinityGraph) -> Result<f64> {
    algebraic_connectivity_with(w, DEFAULT_DENSE_LIMIT)
}

/// [`algebraic_connectivity`] with an explicit dense/iterative cut-over.
///
/// Isolated vertices form components of their own and each contributes a
/// zero eigenvalue, so any graph with an isolated vertex (and at least two
/// vertices) has connectivity 0. The spectrum of the remaining vertices is
/// computed with the usual `I - D^{-1/2} W D^{-1/2}`.
pub fn algebraic_connectivity_with(w: &AffinityGraph, dense_limit: usize) -> Result<f64> {
    let n = w.size();
    ensure!(n >= 2, "algebraic connectivity needs at least 2 vertices, got {n}");
    let degrees = w.degrees();
    if degrees.iter().any(|&d| d == 0.0) {
        return Ok(0.0);
    }
    let low = smallest_laplacian_eigenpairs(w, 2, dense_limit)?;
    Ok(low.values[1].max(0.0))
}
