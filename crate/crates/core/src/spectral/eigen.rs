//! Extreme eigenpairs of the normalized adjacency `S = D^{-1/2} W D^{-1/2}`.
//!
//! The normalized Laplacian is `L = I - S`, so its smallest eigenpairs are the
//! largest eigenpairs of `S`. Small graphs go through a dense symmetric
//! eigensolve; large ones through Lanczos with full reorthogonalization,
//! locking of converged Ritz pairs and explicit restarts.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::error::{Error, Result};
use crate::omp::{dot, norm};
use crate::self_expressive::AffinityGraph;
use crate::seed;

/// Residual bound for accepting a Ritz pair (`||S y - theta y||`).
const RITZ_TOL: f64 = 1e-10;
const MAX_RESTARTS: usize = 300;
const LANCZOS_SEED: u64 = 0x5EED_1A2C_205E_EDED;

/// Which solver produced a spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EigenPath {
    Dense,
    Lanczos,
}

/// The `k` smallest eigenpairs of `L`, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct LowSpectrum {
    pub values: Vec<f64>,
    /// `N x k`, column `i` pairs with `values[i]`.
    pub vectors: DMatrix<f64>,
    pub path: EigenPath,
}

/// `D^{-1/2}` with zero for isolated vertices.
pub(crate) fn inv_sqrt_degrees(w: &AffinityGraph) -> Vec<f64> {
    w.degrees()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect()
}

pub(crate) fn dense_laplacian(w: &AffinityGraph) -> DMatrix<f64> {
    let n = w.size();
    let s = inv_sqrt_degrees(w);
    let mut l = DMatrix::identity(n, n);
    for i in 0..n {
        for (j, v) in w.neighbors(i) {
            l[(i, j)] -= s[i] * v * s[j];
        }
    }
    l
}

/// Full spectrum of a dense symmetric matrix, ascending.
pub(crate) fn dense_symmetric(m: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(format!("{n}x{n} matrix has non-finite entries")));
    }
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 0).ok_or_else(|| {
        Error::Numeric(format!("dense symmetric eigensolve of a {n}x{n} matrix did not converge"))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    Ok((values, vectors))
}

/// Smallest `k` eigenpairs of the normalized Laplacian of `w`.
pub fn smallest_laplacian_eigenpairs(
    w: &AffinityGraph,
    k: usize,
    dense_limit: usize,
) -> Result<LowSpectrum> {
    let n = w.size();
    let k = k.min(n);
    if n <= dense_limit {
        let (values, vectors) = dense_symmetric(dense_laplacian(w))?;
        return Ok(LowSpectrum {
            values: values[..k].to_vec(),
            vectors: vectors.columns(0, k).into_owned(),
            path: EigenPath::Dense,
        });
    }
    let s = inv_sqrt_degrees(w);
    let apply = |x: &[f64], y: &mut [f64]| {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, v) in w.neighbors(i) {
                acc += v * s[j] * x[j];
            }
            y[i] = s[i] * acc;
        }
    };
    let (thetas, vecs) = lanczos_largest(n, apply, k)?;
    let values = thetas.iter().map(|t| 1.0 - t).collect();
    let vectors = DMatrix::from_fn(n, k, |r, c| vecs[c][r]);
    Ok(LowSpectrum { values, vectors, path: EigenPath::Lanczos })
}

/// Largest `k` eigenpairs of the symmetric operator `apply` on `R^n`,
/// eigenvalues descending.
pub(crate) fn lanczos_largest(
    n: usize,
    apply: impl Fn(&[f64], &mut [f64]),
    k: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut rng = seed::rng(LANCZOS_SEED);
    let random_vec = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    };
    let krylov_dim = (2 * k + 40).max(80).min(n);

    let mut locked: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut start = random_vec(&mut rng);
    let mut w = vec![0.0; n];

    for _ in 0..MAX_RESTARTS {
        let need = k - locked.len();
        let room = n - locked.len();
        let m = krylov_dim.min(room);

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let Some(v0) = orthonormal_against(&start, &locked, &[]) else {
            start = random_vec(&mut rng);
            continue;
        };
        basis.push(v0);
        let mut last_beta = 0.0;
        while basis.len() <= m {
            let j = basis.len() - 1;
            apply(&basis[j], &mut w);
            let a = dot(&basis[j], &w);
            alpha.push(a);
            for (x, v) in w.iter_mut().zip(&basis[j]) {
                *x -= a * v;
            }
            if j > 0 {
                let b = beta[j - 1];
                for (x, v) in w.iter_mut().zip(&basis[j - 1]) {
                    *x -= b * v;
                }
            }
            let raw = norm(&w);
            let next = orthonormal_against(&w, &locked, &basis);
            if basis.len() == m {
                last_beta = if next.is_some() { raw } else { 0.0 };
                break;
            }
            match next {
                Some(v) if raw > 1e-12 => {
                    beta.push(raw);
                    basis.push(v);
                }
                _ => {
                    // Invariant subspace: continue with a fresh direction.
                    let fresh = random_vec(&mut rng);
                    match orthonormal_against(&fresh, &locked, &basis) {
                        Some(v) => {
                            beta.push(0.0);
                            basis.push(v);
                        }
                        None => {
                            last_beta = 0.0;
                            break;
                        }
                    }
                }
            }
        }

        let size = alpha.len();
        let t = DMatrix::from_fn(size, size, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c || c + 1 == r {
                beta[r.min(c)]
            } else {
                0.0
            }
        });
        let (thetas, s) = dense_symmetric(t)?;
        // Descending order of Ritz values.
        let order: Vec<usize> = (0..size).rev().collect();
        let take = need.min(size);
        let mut pending: Vec<Vec<f64>> = Vec::new();
        for &idx in order.iter().take(take) {
            let theta = thetas[idx];
            let resid = (last_beta * s[(size - 1, idx)]).abs();
            let mut y = vec![0.0; n];
            for (p, b) in basis.iter().enumerate().take(size) {
                let coef = s[(p, idx)];
                for (yi, bi) in y.iter_mut().zip(b) {
                    *yi += coef * bi;
                }
            }
            if resid <= RITZ_TOL {
                if let Some(y) = orthonormal_against(&y, &locked, &[]) {
                    locked.push((theta, y));
                    continue;
                }
            }
            pending.push(y);
        }
        if locked.len() >= k {
            locked.sort_by(|a, b| b.0.total_cmp(&a.0));
            locked.truncate(k);
            let values = locked.iter().map(|l| l.0).collect();
            let vectors = locked.into_iter().map(|l| l.1).collect();
            return Ok((values, vectors));
        }
        start = vec![0.0; n];
        for y in &pending {
            for (s, v) in start.iter_mut().zip(y) {
                *s += v;
            }
        }
        if norm(&start) <= 1e-12 {
            start = random_vec(&mut rng);
        }
    }
    Err(Error::Numeric(format!(
        "Lanczos did not converge to {k} eigenpairs of a {n}x{n} operator in {MAX_RESTARTS} restarts \
         ({} locked)",
        locked.len()
    )))
}

/// Normalizes `x` after removing its components along the locked vectors and
/// `basis` (two passes). `None` when nothing independent remains.
fn orthonormal_against(x: &[f64], locked: &[(f64, Vec<f64>)], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let mut v = x.to_vec();
    let start = norm(&v);
    if start == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for u in locked.iter().map(|l| &l.1).chain(basis.iter()) {
            let d = dot(u, &v);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= d * ui;
            }
        }
    }
    let nv = norm(&v);
    if nv <= 1e-10 * start {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= nv);
    Some(v)
}
