//! Sparse subspace clustering by orthogonal matching pursuit (SSC-OMP).
//!
//! The pipeline is: unit-normalized data points are expressed greedily in
//! terms of the other points ([`omp`], [`self_expressive`]), the resulting
//! coefficients become a symmetric affinity graph, and normalized spectral
//! clustering segments the graph ([`spectral`]). [`synth`] draws data from
//! unions of subspaces, [`metrics`] scores a run against ground truth, and
//! [`theory`] evaluates the geometric conditions under which the greedy
//! representation is guaranteed to stay inside each point's own subspace.

pub mod error;
pub mod metrics;
pub mod omp;
pub mod seed;
pub mod self_expressive;
pub mod spectral;
pub mod synth;
pub mod theory;

pub use nalgebra;

pub use error::{Error, Result};
pub use metrics::{
    clustering_accuracy, connectivity, optimal_assignment, subspace_preserving_error,
    subspace_preserving_percentage, ErrorMode, MetricReport, ThresholdMode,
};
pub use omp::{least_squares_on_support, omp, Dictionary, OmpParams, OmpTrace, SparseCoefficients};
pub use self_expressive::{
    affinity, build_coefficient_matrix, build_coefficient_matrix_traced, lsr_coefficients, AffinityGraph, CoefficientMatrix,
    Dataset,
};
pub use spectral::{
    algebraic_connectivity, normalized_laplacian, spectral_clustering, ClusteringResult,
    KMeansConfig, SpectralConfig,
};
pub use synth::{independent_arrangement, random_arrangement, sample_dataset, SubspaceArrangement, SynthConfig};
