//! Maximum-weight perfect matching on a square matrix (Hungarian method with
//! row/column potentials, `O(n^3)`).

use nalgebra::DMatrix;

use crate::error::{ensure, Result};

/// Permutation `p` maximizing `sum_i weights[(i, p[i])]`.
pub fn optimal_assignment(weights: &DMatrix<f64>) -> Result<Vec<usize>> {
    ensure!(weights.is_square(), "assignment needs a square matrix, got {:?}", weights.shape());
    ensure!(weights.iter().all(|v| v.is_finite()), "assignment weights must be finite");
    let n = weights.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let top = weights.max();
    // Minimize top - w; all costs nonnegative.
    let cost = |i: usize, j: usize| top - weights[(i, j)];

    // 1-based arrays; index 0 is the virtual column used while augmenting.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        matched_row[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let i0 = matched_row[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = col0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        col1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if matched_row[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            matched_row[col0] = matched_row[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[matched_row[j] - 1] = j - 1;
    }
    Ok(perm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_anti_diagonal() {
        let id = DMatrix::from_fn(4, 4, |i, j| if i == j { 10.0 } else { 1.0 });
        assert_eq!(optimal_assignment(&id).unwrap(), vec![0, 1, 2, 3]);
        let anti = DMatrix::from_fn(4, 4, |i, j| if i + j == 3 { 10.0 } else { 1.0 });
        assert_eq!(optimal_assignment(&anti).unwrap(), vec![3, 2, 1, 0]);
        assert!(optimal_assignment(&DMatrix::zeros(2, 3)).is_err());
        assert!(optimal_assignment(&DMatrix::zeros(0, 0)).unwrap().is_empty());
    }
}
