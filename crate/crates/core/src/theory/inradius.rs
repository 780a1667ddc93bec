//! Inradius of a symmetrized convex hull `conv(+-X)` measured inside a
//! subspace.
//!
//! The ball of radius `r` fits in `P = conv(+-X)` exactly when the support
//! function `h(w) = max_j |x_j^T w|` is at least `r` in every unit direction
//! `w` of the subspace, so `r(P) = min_{|w| = 1} h(w)`. Equivalently `1/r` is
//! the largest norm of a point in the polar body `{y : |x_j^T y| <= 1}`,
//! which is attained at one of its vertices. Vertices are intersections of
//! `d` constraint hyperplanes, so when `C(N, d) 2^(d-1)` is small the exact
//! value follows from enumerating them. Otherwise a multi-start descent on
//! `h` gives an upper bound and the result is flagged as inexact.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure, Result};
use crate::seed;
use crate::synth::numerical_rank;

/// Largest number of candidate vertices enumerated before falling back to
/// the heuristic.
pub const EXACT_VERTEX_BUDGET: u64 = 4_000_000;

const FEASIBLE_TOL: f64 = 1e-9;
const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inradius {
    pub value: f64,
    /// `false` when `value` is only an upper bound.
    pub exact: bool,
}

/// Inradius within the span of `points`.
pub fn inradius(points: &[Vec<f64>]) -> Result<Inradius> {
    ensure!(!points.is_empty(), "inradius needs at least one point");
    let dim = points[0].len();
    ensure!(points.iter().all(|p| p.len() == dim), "points have mixed dimensions");
    let x = DMatrix::from_fn(dim, points.len(), |r, c| points[c][r]);
    let svd = x.clone().svd(true, false);
    let rank = numerical_rank(&x);
    ensure!(rank >= 1, "points are all zero");
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let basis = u.select_columns(&order[..rank]);
    inradius_in(points, &basis)
}

/// Inradius within the subspace spanned by the orthonormal columns of
/// `basis`. The points must span that subspace.
pub fn inradius_in(points: &[Vec<f64>], basis: &DMatrix<f64>) -> Result<Inradius> {
    ensure!(!points.is_empty(), "inradius needs at least one point");
    let d = basis.ncols();
    ensure!(d >= 1, "subspace must have positive dimension");
    let coords: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            ensure!(p.len() == basis.nrows(), "point dimension does not match the basis");
            let v = basis.tr_mul(&DVector::from_column_slice(p));
            Ok(v.iter().copied().collect())
        })
        .collect::<Result<_>>()?;
    let cm = DMatrix::from_fn(d, coords.len(), |r, c| coords[c][r]);
    ensure!(
        numerical_rank(&cm) == d,
        "points span a subspace of dimension {} but {d} is required",
        numerical_rank(&cm)
    );
    if vertex_budget(coords.len(), d) <= EXACT_VERTEX_BUDGET {
        Ok(Inradius { value: exact_inradius(&coords, d), exact: true })
    } else {
        Ok(Inradius { value: descent_upper_bound(&coords, d), exact: false })
    }
}

fn vertex_budget(n: usize, d: usize) -> u64 {
    let mut c: u64 = 1;
    for i in 0..d as u64 {
        c = c.saturating_mul(n as u64 - i.min(n as u64)) / (i + 1);
        if c == 0 {
            return 0;
        }
    }
    c.saturating_mul(1u64 << (d - 1).min(62))
}

/// `h(w) = max_j |p_j^T w|`.
pub fn support(coords: &[Vec<f64>], w: &[f64]) -> f64 {
    coords
        .iter()
        .map(|p| p.iter().zip(w).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

fn exact_inradius(coords: &[Vec<f64>], d: usize) -> f64 {
    let n = coords.len();
    let mut best_norm2: f64 = 0.0;
    let mut subset: Vec<usize> = (0..d).collect();
    loop {
        for signs in 0..(1u64 << (d - 1)) {
            // First sign fixed to +; the other half of the vertices are negatives.
            let rhs: Vec<f64> = (0..d)
                .map(|k| if k > 0 && (signs >> (k - 1)) & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            if let Some(y) = solve_active(coords, &subset, &rhs, d) {
                let norm2: f64 = y.iter().map(|v| v * v).sum();
                if norm2 > best_norm2 && coords.iter().all(|p| dot(p, &y).abs() <= 1.0 + FEASIBLE_TOL) {
                    best_norm2 = norm2;
                }
            }
        }
        // Next d-subset in lexicographic order.
        let mut k = d;
        loop {
            if k == 0 {
                return 1.0 / best_norm2.sqrt();
            }
            k -= 1;
            if subset[k] < n - d + k {
                subset[k] += 1;
                for t in k + 1..d {
                    subset[t] = subset[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn solve_active(coords: &[Vec<f64>], subset: &[usize], rhs: &[f64], d: usize) -> Option<Vec<f64>> {
    if d == 1 {
        let a = coords[subset[0]][0];
        return (a.abs() > SINGULAR_TOL).then(|| vec![rhs[0] / a]);
    }
    if d == 2 {
        let (a, b) = (&coords[subset[0]], &coords[subset[1]]);
        let det = a[0] * b[1] - a[1] * b[0];
        if det.abs() <= SINGULAR_TOL {
            return None;
        }
        return Some(vec![(rhs[0] * b[1] - a[1] * rhs[1]) / det, (a[0] * rhs[1] - rhs[0] * b[0]) / det]);
    }
    let m = DMatrix::from_fn(d, d, |r, c| coords[subset[r]][c]);
    let lu = m.lu();
    let det = lu.determinant();
    if det.abs() <= SINGULAR_TOL {
        return None;
    }
    lu.solve(&DVector::from_column_slice(rhs)).map(|v| v.iter().copied().collect())
}

/// Multi-start subgradient descent on the unit sphere; returns the smallest
/// support value seen, an upper bound on the inradius.
fn descent_upper_bound(coords: &[Vec<f64>], d: usize) -> f64 {
    const STARTS: usize = 64;
    const STEPS: usize = 400;
    let mut rng = seed::rng(0x1A4D_1D5E_ED00_0001);
    let mut best = f64::INFINITY;
    // Start from the normals of random facets-to-be as well as random directions.
    for _ in 0..STARTS {
        let mut w: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        normalize(&mut w);
        let mut step = 0.5;
        for _ in 0..STEPS {
            let h = support(coords, &w);
            best = best.min(h);
            let (idx, _) = coords
                .iter()
                .enumerate()
                .map(|(j, p)| (j, dot(p, &w).abs()))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            let sign = dot(&coords[idx], &w).signum();
            // Gradient of |p^T w| projected on the tangent space.
            let p = &coords[idx];
            let radial = dot(p, &w);
            let mut next: Vec<f64> = w
                .iter()
                .zip(p)
                .map(|(wi, pi)| wi - step * sign * (pi - radial * wi))
                .collect();
            normalize(&mut next);
            if support(coords, &next) < h {
                w = next;
            } else {
                step *= 0.7;
            }
            if step < 1e-9 {
                break;
            }
        }
        best = best.min(support(coords, &w));
    }
    best
}

fn normalize(w: &mut [f64]) {
    let n = dot(w, w).sqrt();
    w.iter_mut().for_each(|v| *v /= n);
}
