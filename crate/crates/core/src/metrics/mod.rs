//! Evaluation of a clustering run against ground truth.
//!
//! * `p%`: share of points whose coefficients (above a zero threshold) only
//!   touch points with the same label.
//! * `e%`: average share of each column's l1 mass that falls on other labels.
//! * `c`: smallest algebraic connectivity over the ground-truth clusters.
//! * `a%`: share of points labelled correctly under the best matching of
//!   estimated to true clusters.

mod assignment;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::self_expressive::{AffinityGraph, CoefficientMatrix};
use crate::spectral::{algebraic_connectivity_with, DEFAULT_DENSE_LIMIT};

pub use assignment::optimal_assignment;

/// Coefficients with absolute value at or below this count as zero.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-3;

/// How small a coefficient must be to count as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "value")]
pub enum ThresholdMode {
    /// `|c_ij| <= t`.
    Absolute(f64),
    /// `|c_ij| <= t * max_i |c_ij|` within each column.
    Relative(f64),
}

impl Default for ThresholdMode {
    fn default() -> Self {
        Self::Absolute(DEFAULT_ZERO_THRESHOLD)
    }
}

impl ThresholdMode {
    fn cutoff(&self, column: &[(usize, f64)]) -> f64 {
        match *self {
            Self::Absolute(t) => t,
            Self::Relative(t) => t * column.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max),
        }
    }
}

/// Which entries enter the `e%` ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMode {
    /// Entries at or below the zero threshold are dropped first.
    Thresholded(ThresholdMode),
    /// Every stored entry counts.
    Raw,
}

impl Default for ErrorMode {
    fn default() -> Self {
        Self::Thresholded(ThresholdMode::default())
    }
}

/// The four quality numbers plus stage timings. Metrics that need ground
/// truth are `None` when no labels were supplied.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    pub p_percent: Option<f64>,
    pub e_percent: Option<f64>,
    pub connectivity: Option<f64>,
    pub accuracy_percent: Option<f64>,
    pub runtime_build_seconds: f64,
    pub runtime_cluster_seconds: f64,
}

impl MetricReport {
    pub fn runtime_seconds(&self) -> f64 {
        self.runtime_build_seconds + self.runtime_cluster_seconds
    }
}

fn check_labels(c: &CoefficientMatrix, labels: &[usize]) -> Result<()> {
    ensure!(
        labels.len() == c.size(),
        "{} labels for a {}x{} coefficient matrix",
        labels.len(),
        c.size(),
        c.size()
    );
    Ok(())
}

/// Percentage of columns whose above-threshold entries all share the
/// column's label.
pub fn subspace_preserving_percentage(
    c: &CoefficientMatrix,
    labels: &[usize],
    threshold: ThresholdMode,
) -> Result<f64> {
    check_labels(c, labels)?;
    let n = c.size();
    if n == 0 {
        return Ok(100.0);
    }
    let preserving = (0..n)
        .filter(|&j| {
            let col = c.column(j);
            let cut = threshold.cutoff(&col);
            col.iter().all(|&(i, v)| v.abs() <= cut || labels[i] == labels[j])
        })
        .count();
    Ok(100.0 * preserving as f64 / n as f64)
}

/// Average percentage of l1 mass on other labels. Columns with no mass
/// contribute zero.
pub fn subspace_preserving_error(c: &CoefficientMatrix, labels: &[usize], mode: ErrorMode) -> Result<f64> {
    check_labels(c, labels)?;
    let n = c.size();
    if n == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for j in 0..n {
        let col = c.column(j);
        let cut = match mode {
            ErrorMode::Thresholded(t) => t.cutoff(&col),
            ErrorMode::Raw => -1.0,
        };
        let (mut own, mut all) = (0.0, 0.0);
        for &(i, v) in &col {
            let a = v.abs();
            if a > cut {
                all += a;
                if labels[i] == labels[j] {
                    own += a;
                }
            }
        }
        if all > 0.0 {
            total += 1.0 - own / all;
        }
    }
    Ok(100.0 * total / n as f64)
}

/// Options for [`connectivity_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityOptions {
    /// Ignore clusters with a single point instead of failing.
    pub skip_singletons: bool,
    pub dense_limit: usize,
}

impl Default for ConnectivityOptions {
    fn default() -> Self {
        Self { skip_singletons: false, dense_limit: DEFAULT_DENSE_LIMIT }
    }
}

/// `min_i lambda_2` over the subgraphs induced by each ground-truth cluster.
pub fn connectivity(w: &AffinityGraph, labels: &[usize]) -> Result<f64> {
    connectivity_with(w, labels, ConnectivityOptions::default())
}

pub fn connectivity_with(w: &AffinityGraph, labels: &[usize], opts: ConnectivityOptions) -> Result<f64> {
    ensure!(
        labels.len() == w.size(),
        "{} labels for a graph with {} vertices",
        labels.len(),
        w.size()
    );
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (j, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(j);
    }
    let mut best = f64::INFINITY;
    for (label, members) in &groups {
        if members.len() < 2 {
            ensure!(opts.skip_singletons, "cluster {label} has a single point");
            continue;
        }
        let sub = w.induced_subgraph(members);
        best = best.min(algebraic_connectivity_with(&sub, opts.dense_limit)?);
    }
    ensure!(best.is_finite(), "no cluster with at least two points");
    Ok(best)
}

/// Maps arbitrary labels to `0..k` in sorted order.
fn dense_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mapped = labels.iter().map(|l| ids.binary_search(l).unwrap()).collect();
    (mapped, ids.len())
}

/// Contingency counts: `(estimated cluster, true cluster)`, padded square.
pub fn contingency(estimated: &[usize], truth: &[usize]) -> DMatrix<f64> {
    let (est, ke) = dense_labels(estimated);
    let (tru, kt) = dense_labels(truth);
    let k = ke.max(kt);
    let mut m = DMatrix::zeros(k, k);
    for (&e, &t) in est.iter().zip(&tru) {
        m[(e, t)] += 1.0;
    }
    m
}

/// Percentage of points labelled correctly under the best one-to-one
/// matching between estimated and true clusters.
pub fn clustering_accuracy(estimated: &[usize], truth: &[usize]) -> Result<f64> {
    ensure!(
        estimated.len() == truth.len(),
        "{} estimated labels vs {} true labels",
        estimated.len(),
        truth.len()
    );
    if truth.is_empty() {
        return Ok(100.0);
    }
    let table = contingency(estimated, truth);
    let perm = optimal_assignment(&table)?;
    let matched: f64 = perm.iter().enumerate().map(|(i, &j)| table[(i, j)]).sum();
    Ok(100.0 * matched / truth.len() as f64)
}
