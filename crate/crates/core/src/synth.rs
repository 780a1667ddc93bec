//! Data drawn from unions of linear subspaces.
//!
//! Bases are orthonormalized Gaussian matrices (uniformly random subspaces);
//! points are normalized Gaussian combinations of a basis, i.e. uniform on
//! the unit sphere of their subspace. All draws come from a seeded ChaCha8
//! stream, so a `(config, seed)` pair always yields the same bytes.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::seed;
use crate::self_expressive::Dataset;

/// Relative singular-value cut-off for rank decisions.
const RANK_RTOL: f64 = 1e-10;

/// Orthonormal bases `U_i` (each `D x d_i`) of the generated subspaces.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceArrangement {
    pub bases: Vec<DMatrix<f64>>,
    pub ambient: usize,
    /// Set when the construction guarantees independence.
    pub independent: bool,
}

impl SubspaceArrangement {
    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.ncols()).collect()
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// Independence checked numerically: the stacked bases have full column rank.
    pub fn stacked_rank(&self) -> usize {
        let total: usize = self.dims().iter().sum();
        if total == 0 {
            return 0;
        }
        let mut stacked = DMatrix::zeros(self.ambient, total);
        let mut offset = 0;
        for b in &self.bases {
            stacked.columns_mut(offset, b.ncols()).copy_from(b);
            offset += b.ncols();
        }
        numerical_rank(&stacked)
    }

    pub fn is_independent(&self) -> bool {
        let total: usize = self.dims().iter().sum();
        total <= self.ambient && self.stacked_rank() == total
    }

    /// `||(I - U_i U_i^T) x||`.
    pub fn distance_to(&self, i: usize, x: &[f64]) -> f64 {
        let u = &self.bases[i];
        let xv = nalgebra::DVector::from_column_slice(x);
        let proj = u * (u.tr_mul(&xv));
        (xv - proj).norm()
    }
}

pub(crate) fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_RTOL * smax).count()
}

/// How many points each subspace receives for a density `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointCount {
    /// `round(rho * d)` points (experiment convention).
    RhoD,
    /// `round(rho * d) + 1` points (random-model theorem convention).
    RhoDPlusOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Dimension of every subspace.
    pub dims: Vec<usize>,
    pub ambient: usize,
    pub density: f64,
    pub seed: u64,
    pub count: PointCount,
}

impl SynthConfig {
    /// `n` subspaces of equal dimension `d` in `R^ambient`.
    pub fn uniform(n: usize, d: usize, ambient: usize, density: f64, seed: u64) -> Self {
        Self { dims: vec![d; n], ambient, density, seed, count: PointCount::RhoD }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.dims.is_empty(), "need at least one subspace");
        ensure!(self.ambient >= 1, "ambient dimension must be positive");
        for &d in &self.dims {
            ensure!(d >= 1 && d <= self.ambient, "subspace dimension {d} not in [1, {}]", self.ambient);
        }
        ensure!(self.density >= 1.0, "density must be at least 1, got {}", self.density);
        Ok(())
    }

    pub fn points_per_subspace(&self) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| {
                let base = (self.density * d as f64).round() as usize;
                match self.count {
                    PointCount::RhoD => base,
                    PointCount::RhoDPlusOne => base + 1,
                }
            })
            .collect()
    }

    pub fn total_points(&self) -> usize {
        self.points_per_subspace().iter().sum()
    }
}

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    // Column-major fill keeps the draw order independent of nalgebra internals.
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        data.push(rng.sample::<f64, _>(StandardNormal));
    }
    DMatrix::from_vec(rows, cols, data)
}

fn orthonormalize(g: DMatrix<f64>) -> DMatrix<f64> {
    let cols = g.ncols();
    let q = g.qr().q();
    q.columns(0, cols).into_owned()
}

/// Independent uniformly random subspaces of the configured dimensions.
pub fn random_arrangement(config: &SynthConfig) -> Result<SubspaceArrangement> {
    config.validate()?;
    let mut rng = seed::rng(config.seed);
    let bases = config
        .dims
        .iter()
        .map(|&d| orthonormalize(gaussian(config.ambient, d, &mut rng)))
        .collect();
    Ok(SubspaceArrangement { bases, ambient: config.ambient, independent: false })
}

/// Subspaces spanned by disjoint blocks of one random orthonormal frame, so
/// the sum of the subspaces is direct.
pub fn independent_arrangement(dims: &[usize], ambient: usize, seed: u64) -> Result<SubspaceArrangement> {
    let total: usize = dims.iter().sum();
    ensure!(!dims.is_empty(), "need at least one subspace");
    ensure!(dims.iter().all(|&d| d >= 1), "subspace dimensions must be positive");
    ensure!(
        total <= ambient,
        "dimensions sum to {total}, exceeding the ambient dimension {ambient}"
    );
    let mut rng = seed::rng(seed);
    let frame = orthonormalize(gaussian(ambient, total, &mut rng));
    let mut bases = Vec::with_capacity(dims.len());
    let mut offset = 0;
    for &d in dims {
        bases.push(frame.columns(offset, d).into_owned());
        offset += d;
    }
    Ok(SubspaceArrangement { bases, ambient, independent: true })
}

/// `n` copies of one random subspace.
pub fn identical_arrangement(n: usize, d: usize, ambient: usize, seed: u64) -> Result<SubspaceArrangement> {
    ensure!(n >= 1 && d >= 1 && d <= ambient, "invalid identical arrangement {n}x{d} in R^{ambient}");
    let mut rng = seed::rng(seed);
    let basis = orthonormalize(gaussian(ambient, d, &mut rng));
    Ok(SubspaceArrangement { bases: vec![basis; n], ambient, independent: false })
}

/// Uniform points on the unit sphere of each subspace, grouped by subspace
/// and labelled with the subspace index.
pub fn sample_dataset(arr: &SubspaceArrangement, counts: &[usize], seed: u64) -> Result<Dataset> {
    ensure!(
        counts.len() == arr.len(),
        "{} counts for {} subspaces",
        counts.len(),
        arr.len()
    );
    ensure!(counts.iter().all(|&c| c >= 1), "every subspace needs at least one point");
    let total: usize = counts.iter().sum();
    let mut rng = seed::rng(seed);
    let mut points = DMatrix::zeros(arr.ambient, total);
    let mut labels = Vec::with_capacity(total);
    let mut col = 0;
    for (i, (basis, &count)) in arr.bases.iter().zip(counts).enumerate() {
        let coeffs = gaussian(basis.ncols(), count, &mut rng);
        let mut block = basis * coeffs;
        for mut c in block.column_iter_mut() {
            let norm = c.norm();
            c /= norm;
        }
        points.columns_mut(col, count).copy_from(&block);
        labels.extend(std::iter::repeat(i).take(count));
        col += count;
    }
    Dataset::new(points, Some(labels))
}

/// Sample with every group holding the same points (all conditions must fail).
pub fn sample_shared_points(arr: &SubspaceArrangement, count: usize, seed: u64) -> Result<Dataset> {
    let one = SubspaceArrangement { bases: vec![arr.bases[0].clone()], ambient: arr.ambient, independent: false };
    let base = sample_dataset(&one, &[count], seed)?;
    let n = arr.len();
    let mut points = DMatrix::zeros(arr.ambient, n * count);
    for i in 0..n {
        points.columns_mut(i * count, count).copy_from(base.points());
    }
    let labels = (0..n).flat_map(|i| std::iter::repeat(i).take(count)).collect();
    Dataset::new(points, Some(labels))
}

/// Arrangement plus data for one synthetic instance.
pub fn generate(config: &SynthConfig) -> Result<(SubspaceArrangement, Dataset)> {
    let arr = random_arrangement(config)?;
    let data = sample_dataset(&arr, &config.points_per_subspace(), seed::derive(config.seed, 1))?;
    Ok((arr, data))
}
