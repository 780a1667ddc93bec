//! Lloyd's k-means with k-means++ seeding and deterministic restarts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when the inertia improves by less than this fraction.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self { restarts: 20, max_iter: 300, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub inertia: f64,
    /// `k` centroids, each of length `dim`.
    pub centroids: Vec<Vec<f64>>,
}

/// Clusters the rows of a row-major `n x dim` array. Restart `r` draws from
/// the stream `derive(seed, r)`; the lowest-inertia run wins, earliest on ties.
pub fn kmeans(
    rows: &[f64],
    dim: usize,
    k: usize,
    config: &KMeansConfig,
    seed: u64,
) -> Result<KMeansResult> {
    ensure!(dim >= 1, "k-means needs at least one feature");
    ensure!(rows.len() % dim == 0, "row-major data length is not a multiple of {dim}");
    let n = rows.len() / dim;
    ensure!(k >= 1 && k <= n, "k = {k} must be in [1, {n}]");
    ensure!(config.restarts >= 1, "k-means needs at least one restart");

    let mut best: Option<KMeansResult> = None;
    for r in 0..config.restarts {
        let run = lloyd(rows, dim, k, config, seed::derive(seed, r as u64));
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus(rows: &[f64], dim: usize, k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = rows.len() / dim;
    let row = |i: usize| &rows[i * dim..(i + 1) * dim];
    let mut centroids = vec![row(rng.gen_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(row(i), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        let c = row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(row(i), &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(rows: &[f64], dim: usize, centroids: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let x = &rows[i * dim..(i + 1) * dim];
        let mut best = (0, f64::INFINITY);
        for (c, centroid) in centroids.iter().enumerate() {
            let d = sq_dist(x, centroid);
            if d < best.1 {
                best = (c, d);
            }
        }
        *label = best.0;
        inertia += best.1;
    }
    inertia
}

fn lloyd(rows: &[f64], dim: usize, k: usize, config: &KMeansConfig, seed: u64) -> KMeansResult {
    let n = rows.len() / dim;
    let mut rng = seed::rng(seed);
    let mut centroids = plus_plus(rows, dim, k, &mut rng);
    let mut labels = vec![0usize; n];
    let mut inertia = assign(rows, dim, &centroids, &mut labels);
    for _ in 0..config.max_iter {
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(&rows[i * dim..(i + 1) * dim]) {
                *s += x;
            }
        }
        for c in 0..k {
            // An emptied cluster keeps its previous centroid.
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let prev = inertia;
        inertia = assign(rows, dim, &centroids, &mut labels);
        if prev - inertia <= config.tol * prev {
            break;
        }
    }
    KMeansResult { labels, inertia, centroids }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_obvious_groups_and_is_deterministic() {
        let rows = [0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 5.0, 5.0, 5.1, 5.0, 5.0, 5.1];
        let cfg = KMeansConfig::default();
        let a = kmeans(&rows, 2, 2, &cfg, 42).unwrap();
        assert_eq!(a.labels[0], a.labels[1]);
        assert_eq!(a.labels[1], a.labels[2]);
        assert_eq!(a.labels[3], a.labels[4]);
        assert_ne!(a.labels[0], a.labels[3]);
        let b = kmeans(&rows, 2, 2, &cfg, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_points_and_bad_k() {
        let rows = [1.0; 8];
        let r = kmeans(&rows, 2, 3, &KMeansConfig::default(), 1).unwrap();
        assert_eq!(r.inertia, 0.0);
        assert!(kmeans(&rows, 2, 5, &KMeansConfig::default(), 1).is_err());
        assert!(kmeans(&rows, 2, 0, &KMeansConfig::default(), 1).is_err());
    }
}
