//! Sufficient conditions for subspace-preserving pursuit, evaluated on data.
//!
//! For each subspace `S_i` the checks compare how strongly points (or
//! pursuit residual directions) of `S_i` correlate with points of other
//! subspaces against how well the points of `S_i` cover their subspace
//! (the inradius of their symmetrized convex hull):
//!
//! * residual condition: `max_k mu(W^i, X^k) < r_i`
//! * data condition: `max_k mu(X^i, X^k) < r_i^2`
//! * angle condition: `max_k mu(X^i, X^k) < r_i - 2 sqrt(1 - r_i^2) / 12^(1/4) * max_k cos(theta_ik)`
//!
//! where `r_i = min_j r(conv(+-X^i_{-j}))` and `W^i` collects the normalized
//! nonzero residuals of pursuits run inside `S_i` only. All conditions are
//! sufficient, never necessary. Strict inequalities are evaluated with a
//! `1e-10` margin.

mod inradius;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::omp::{omp, Dictionary, OmpParams, ZERO_RESIDUAL};
use crate::self_expressive::Dataset;
use crate::synth::SubspaceArrangement;

pub use inradius::{inradius, inradius_in, support, Inradius, EXACT_VERTEX_BUDGET};

/// Required gap for a strict inequality to count as satisfied.
pub const STRICT_MARGIN: f64 = 1e-10;

/// Default `c(rho)` of the random-model bound for large densities.
pub const DEFAULT_C_RHO: f64 = 0.353_553_390_593_273_73; // 1 / sqrt(8)

const UNIT_TOL: f64 = 1e-8;

/// Normalized nonzero residuals of in-subspace pursuits for one subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDirectionSet {
    pub owner: usize,
    pub directions: Vec<Vec<f64>>,
    /// Index (into the dataset) of the point whose pursuit produced each direction.
    pub provenance: Vec<usize>,
}

impl ResidualDirectionSet {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Directions produced by the pursuit of point `j`.
    pub fn of_point(&self, j: usize) -> impl Iterator<Item = &[f64]> {
        self.directions
            .iter()
            .zip(&self.provenance)
            .filter(move |(_, &p)| p == j)
            .map(|(d, _)| d.as_slice())
    }
}

fn labels_of(data: &Dataset) -> Result<&[usize]> {
    data.labels()
        .ok_or_else(|| crate::Error::Contract("ground-truth labels are required".into()))
}

/// Residual directions of point `j` pursued over the other members of its group.
fn point_directions(data: &Dataset, members: &[usize], j: usize) -> Result<Vec<Vec<f64>>> {
    let others: Vec<usize> = members.iter().copied().filter(|&m| m != j).collect();
    let dict = Dictionary::unnormalized(data.columns(&others))?;
    let (_, trace) = omp(&dict, data.point(j), OmpParams::new(others.len(), 0.0))?;
    Ok(trace
        .residuals
        .into_iter()
        .filter_map(|q| {
            let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            (n > ZERO_RESIDUAL).then(|| q.into_iter().map(|v| v / n).collect())
        })
        .collect())
}

/// The residual direction set `W^i` of subspace `i`.
pub fn residual_directions(data: &Dataset, subspace: usize) -> Result<ResidualDirectionSet> {
    labels_of(data)?;
    let members = data.members(subspace);
    ensure!(
        members.len() >= 2,
        "subspace {subspace} has {} point(s); residual directions need at least 2",
        members.len()
    );
    let mut directions = Vec::new();
    let mut provenance = Vec::new();
    for &j in &members {
        for w in point_directions(data, &members, j)? {
            directions.push(w);
            provenance.push(j);
        }
    }
    Ok(ResidualDirectionSet { owner: subspace, directions, provenance })
}

fn check_unit(set: &[Vec<f64>], name: &str) -> Result<()> {
    ensure!(!set.is_empty(), "coherence: {name} is empty");
    for v in set {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        ensure!((n - 1.0).abs() <= UNIT_TOL, "coherence: {name} has a vector of norm {n}");
    }
    Ok(())
}

/// `max |<x, y>|` over `x` in `a`, `y` in `b`.
pub fn coherence(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    check_unit(a, "first set")?;
    check_unit(b, "second set")?;
    ensure!(a[0].len() == b[0].len(), "coherence: sets live in different dimensions");
    Ok(raw_coherence(a, b))
}

fn raw_coherence(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut best: f64 = 0.0;
    for x in a {
        for y in b {
            let d: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
            best = best.max(d.abs());
        }
    }
    best
}

fn check_orthonormal(u: &DMatrix<f64>) -> Result<()> {
    let gram = u.tr_mul(u);
    let err = (gram - DMatrix::identity(u.ncols(), u.ncols())).abs().max();
    ensure!(err <= UNIT_TOL, "basis is not orthonormal (deviation {err})");
    Ok(())
}

/// Smallest principal angle between two subspaces given by orthonormal bases.
pub fn principal_angle(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64> {
    ensure!(u.nrows() == v.nrows(), "bases live in different ambient spaces");
    check_orthonormal(u)?;
    check_orthonormal(v)?;
    let s = u.tr_mul(v).svd(false, false).singular_values.max();
    Ok(s.clamp(0.0, 1.0).acos().clamp(0.0, std::f64::consts::FRAC_PI_2))
}

/// One strict inequality `lhs < rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
}

impl Inequality {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self) -> bool {
        self.lhs < self.rhs - STRICT_MARGIN
    }
}

/// Everything the three conditions need for one subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceGeometry {
    pub subspace: usize,
    pub dimension: usize,
    pub points: Vec<usize>,
    /// `r(conv(+-X^i_{-j}))` for each member `j`, same order as `points`.
    pub leave_one_out_inradius: Vec<f64>,
    /// `r_i`, the minimum of the above.
    pub inradius: f64,
    pub inradius_exact: bool,
    pub directions: ResidualDirectionSet,
    /// `mu(W^i, X^k)` for every other subspace `k` (entry `i` is unused, 0).
    pub residual_coherence: Vec<f64>,
    /// `mu(X^i, X^k)`.
    pub data_coherence: Vec<f64>,
    /// `cos(theta_ik)`.
    pub cos_angle: Vec<f64>,
}

impl SubspaceGeometry {
    fn max_other(&self, v: &[f64]) -> f64 {
        v.iter()
            .enumerate()
            .filter(|(k, _)| *k != self.subspace)
            .map(|(_, x)| *x)
            .fold(0.0, f64::max)
    }

    pub fn max_residual_coherence(&self) -> f64 {
        self.max_other(&self.residual_coherence)
    }

    pub fn max_data_coherence(&self) -> f64 {
        self.max_other(&self.data_coherence)
    }

    pub fn max_cos_angle(&self) -> f64 {
        self.max_other(&self.cos_angle)
    }

    pub fn residual_condition(&self) -> Inequality {
        Inequality { lhs: self.max_residual_coherence(), rhs: self.inradius }
    }

    pub fn data_condition(&self) -> Inequality {
        Inequality { lhs: self.max_data_coherence(), rhs: self.inradius * self.inradius }
    }

    pub fn angle_condition(&self) -> Inequality {
        let r = self.inradius;
        let factor = 2.0 * (1.0 - r * r).max(0.0).sqrt() / 12f64.powf(0.25);
        Inequality { lhs: self.max_data_coherence(), rhs: r - factor * self.max_cos_angle() }
    }
}

/// Shared geometric quantities of a labelled instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub subspaces: Vec<SubspaceGeometry>,
}

fn group_points(data: &Dataset, members: &[usize]) -> Vec<Vec<f64>> {
    members.iter().map(|&j| data.point(j).to_vec()).collect()
}

/// Computes residual directions, leave-one-out inradii, coherences and
/// principal angles for every subspace.
pub fn analyze(data: &Dataset, arr: &SubspaceArrangement) -> Result<Geometry> {
    let labels = labels_of(data)?;
    let n = arr.len();
    ensure!(n >= 1, "arrangement has no subspaces");
    ensure!(labels.iter().all(|&l| l < n), "labels exceed the number of subspaces");
    ensure!(arr.ambient == data.dim(), "arrangement and data have different ambient dimensions");
    let groups: Vec<Vec<usize>> = (0..n).map(|i| data.members(i)).collect();
    let group_pts: Vec<Vec<Vec<f64>>> = groups.iter().map(|g| group_points(data, g)).collect();

    let mut cos = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..n {
            if i != k {
                cos[(i, k)] = principal_angle(&arr.bases[i], &arr.bases[k])?.cos();
            }
        }
    }

    let mut subspaces = Vec::with_capacity(n);
    for i in 0..n {
        let members = &groups[i];
        ensure!(members.len() >= 2, "subspace {i} needs at least 2 points");
        let directions = residual_directions(data, i)?;
        let mut loo = Vec::with_capacity(members.len());
        let mut exact = true;
        for p in 0..members.len() {
            let rest: Vec<Vec<f64>> = group_pts[i]
                .iter()
                .enumerate()
                .filter(|(q, _)| *q != p)
                .map(|(_, x)| x.clone())
                .collect();
            let r = inradius_in(&rest, &arr.bases[i])?;
            exact &= r.exact;
            loo.push(r.value);
        }
        let inradius = loo.iter().copied().fold(f64::INFINITY, f64::min);
        let residual_coherence = (0..n)
            .map(|k| if k == i { 0.0 } else { raw_coherence(&directions.directions, &group_pts[k]) })
            .collect();
        let data_coherence = (0..n)
            .map(|k| if k == i { 0.0 } else { raw_coherence(&group_pts[i], &group_pts[k]) })
            .collect();
        subspaces.push(SubspaceGeometry {
            subspace: i,
            dimension: arr.bases[i].ncols(),
            points: members.clone(),
            leave_one_out_inradius: loo,
            inradius,
            inradius_exact: exact,
            directions,
            residual_coherence,
            data_coherence,
            cos_angle: cos.row(i).iter().copied().collect(),
        });
    }
    Ok(Geometry { subspaces })
}

/// Which sufficient condition a report is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// Residual-direction coherence against the inradius.
    ResidualCoherence,
    /// Data coherence against the squared inradius.
    DataCoherence,
    /// Data coherence against an inradius/angle combination.
    SubspaceAngle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubspaceVerdict {
    pub subspace: usize,
    pub inradius: f64,
    pub inequality: Inequality,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub subspaces: Vec<SubspaceVerdict>,
    /// Every subspace satisfies its inequality.
    pub pass: bool,
    /// All inradii were computed exactly.
    pub exact: bool,
}

impl ConditionReport {
    pub fn min_margin(&self) -> f64 {
        self.subspaces.iter().map(|s| s.inequality.margin()).fold(f64::INFINITY, f64::min)
    }
}

impl Geometry {
    pub fn report(&self, condition: Condition) -> ConditionReport {
        let subspaces: Vec<SubspaceVerdict> = self
            .subspaces
            .iter()
            .map(|g| {
                let inequality = match condition {
                    Condition::ResidualCoherence => g.residual_condition(),
                    Condition::DataCoherence => g.data_condition(),
                    Condition::SubspaceAngle => g.angle_condition(),
                };
                SubspaceVerdict { subspace: g.subspace, inradius: g.inradius, inequality, pass: inequality.holds() }
            })
            .collect();
        ConditionReport {
            condition,
            pass: subspaces.iter().all(|s| s.pass),
            exact: self.subspaces.iter().all(|g| g.inradius_exact),
            subspaces,
        }
    }

    pub fn subspace_of(&self, j: usize) -> Option<&SubspaceGeometry> {
        self.subspaces.iter().find(|g| g.points.contains(&j))
    }
}

/// Residual-direction condition for every subspace.
pub fn check_theorem2(data: &Dataset, arr: &SubspaceArrangement) -> Result<ConditionReport> {
    Ok(analyze(data, arr)?.report(Condition::ResidualCoherence))
}

/// Data-coherence condition against the squared inradius.
pub fn check_corollary1(data: &Dataset, arr: &SubspaceArrangement) -> Result<ConditionReport> {
    Ok(analyze(data, arr)?.report(Condition::DataCoherence))
}

/// Data-coherence condition including principal angles.
pub fn check_dyer_condition(data: &Dataset, arr: &SubspaceArrangement) -> Result<ConditionReport> {
    Ok(analyze(data, arr)?.report(Condition::SubspaceAngle))
}

/// Slack of each link in the inequality chain for one point (`>= 0` means
/// the link holds); minima over that point's residual directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSlack {
    /// `max_k mu(W^i, X^k) - max_{x in other subspaces} |w^T x|`
    pub direction_vs_residual_coherence: f64,
    /// `max_k mu(X^i, X^k) / r_i - max_k mu(W^i, X^k)`
    pub residual_vs_data_coherence: f64,
    /// `max_{x in X^i \ x_j} |w^T x| - r(P^i_{-j})`
    pub own_support_vs_inradius: f64,
    /// `r(P^i_{-j}) - r_i`
    pub leave_one_out_vs_min: f64,
}

impl ChainSlack {
    pub fn min(&self) -> f64 {
        self.direction_vs_residual_coherence
            .min(self.residual_vs_data_coherence)
            .min(self.own_support_vs_inradius)
            .min(self.leave_one_out_vs_min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub point: usize,
    pub subspace: usize,
    pub slack: ChainSlack,
    pub exact: bool,
    pub pass: bool,
}

/// Slack allowed before a chain link counts as violated.
pub const CHAIN_TOLERANCE: f64 = 1e-8;

impl Geometry {
    /// Evaluates the four chain inequalities for point `j`.
    pub fn chain(&self, data: &Dataset, j: usize) -> Result<ChainReport> {
        let g = self
            .subspace_of(j)
            .ok_or_else(|| crate::Error::Contract(format!("point {j} is not in any subspace")))?;
        let i = g.subspace;
        let pos = g.points.iter().position(|&p| p == j).expect("member");
        let others: Vec<Vec<f64>> = self
            .subspaces
            .iter()
            .filter(|h| h.subspace != i)
            .flat_map(|h| h.points.iter().map(|&p| data.point(p).to_vec()))
            .collect();
        let own_rest: Vec<Vec<f64>> =
            g.points.iter().filter(|&&p| p != j).map(|&p| data.point(p).to_vec()).collect();
        let mu_w = g.max_residual_coherence();
        let mu_x = g.max_data_coherence();
        let r_loo = g.leave_one_out_inradius[pos];

        let mut slack = ChainSlack {
            direction_vs_residual_coherence: f64::INFINITY,
            residual_vs_data_coherence: mu_x / g.inradius - mu_w,
            own_support_vs_inradius: f64::INFINITY,
            leave_one_out_vs_min: r_loo - g.inradius,
        };
        for w in g.directions.of_point(j) {
            let cross = if others.is_empty() { 0.0 } else { raw_coherence(&[w.to_vec()], &others) };
            let own = raw_coherence(&[w.to_vec()], &own_rest);
            slack.direction_vs_residual_coherence = slack.direction_vs_residual_coherence.min(mu_w - cross);
            slack.own_support_vs_inradius = slack.own_support_vs_inradius.min(own - r_loo);
        }
        Ok(ChainReport {
            point: j,
            subspace: i,
            slack,
            exact: g.inradius_exact,
            pass: slack.min() >= -CHAIN_TOLERANCE,
        })
    }
}

/// Chain inequalities for point `j` of a labelled instance.
pub fn verify_lemma2_chain(data: &Dataset, arr: &SubspaceArrangement, j: usize) -> Result<ChainReport> {
    ensure!(j < data.len(), "point {j} out of range");
    analyze(data, arr)?.chain(data, j)
}

/// Closed-form evaluation of the random-model guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomModelReport {
    /// `N = n (rho d + 1)`.
    pub n_points: f64,
    /// Right-hand side `c^2 log(rho) / 12 * D / log N`.
    pub dimension_bound: f64,
    pub pass: bool,
    /// `1 - 2d/N - N exp(-sqrt(rho) d)`.
    pub probability_lower_bound: f64,
}

/// Checks `d < c(rho)^2 log(rho) / 12 * D / log N` and the success
/// probability bound for `n` random `d`-dimensional subspaces of `R^D`
/// carrying `rho d + 1` points each.
pub fn check_random_model(d: usize, ambient: usize, n: usize, rho: f64, c_rho: f64) -> Result<RandomModelReport> {
    ensure!(rho > 1.0 && rho.is_finite(), "density must exceed 1, got {rho}");
    ensure!(d >= 1 && n >= 1 && ambient >= 1, "d, n and D must be positive");
    ensure!(c_rho > 0.0, "c(rho) must be positive");
    let df = d as f64;
    let n_points = n as f64 * (rho * df + 1.0);
    let dimension_bound = c_rho * c_rho * rho.ln() / 12.0 * ambient as f64 / n_points.ln();
    let probability_lower_bound = 1.0 - 2.0 * df / n_points - n_points * (-(rho.sqrt()) * df).exp();
    Ok(RandomModelReport {
        n_points,
        dimension_bound,
        pass: df < dimension_bound,
        probability_lower_bound,
    })
}

/// Which branch of the scalar argument comparing the angle condition with
/// the residual condition applies, and whether its conclusion holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarImplication {
    /// `mu < r - sqrt(2 - 2r) cos` does not hold; nothing to check.
    PremiseFails,
    /// `r <= 1/2`: conclusion `cos < r`.
    SmallInradius(bool),
    /// `r > 1/2`: conclusion `mu < r^2`.
    LargeInradius(bool),
}

impl ScalarImplication {
    pub fn violated(&self) -> bool {
        matches!(self, Self::SmallInradius(false) | Self::LargeInradius(false))
    }
}

/// Evaluates the case split for one `(mu, r, cos theta)` triple.
pub fn scalar_implication(mu: f64, r: f64, cos: f64) -> ScalarImplication {
    if !(mu < r - (2.0 - 2.0 * r).sqrt() * cos) {
        return ScalarImplication::PremiseFails;
    }
    if r <= 0.5 {
        ScalarImplication::SmallInradius(cos < r)
    } else {
        ScalarImplication::LargeInradius(mu < r * r)
    }
}

/// `||(I - U U^T) x||` for a direction and an orthonormal basis.
pub fn distance_to_subspace(basis: &DMatrix<f64>, x: &[f64]) -> f64 {
    let v = DVector::from_column_slice(x);
    (&v - basis * basis.tr_mul(&v)).norm()
}
