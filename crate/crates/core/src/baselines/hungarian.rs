//! Rectangular minimum-cost assignment (shortest augmenting paths with potentials).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Minimum-cost assignment for a row-major `rows × cols` matrix.
///
/// Returns, for every row, the column it is matched to. When `rows ≤ cols` every row is
/// matched; otherwise every column is matched and the surplus rows get `None`.
pub fn solve_assignment<T: Scalar>(cost: &[T], rows: usize, cols: usize) -> Result<Vec<Option<usize>>> {
    if cost.len() != rows * cols {
        return Err(Error::ShapeMismatch { expected: rows * cols, actual: cost.len() });
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("assignment cost"));
    }
    if rows == 0 || cols == 0 {
        return Ok(vec![None; rows]);
    }
    if rows <= cols {
        return Ok(solve_wide(|r, c| cost[r * cols + c], rows, cols).into_iter().map(Some).collect());
    }
    let by_col = solve_wide(|c, r| cost[r * cols + c], cols, rows);
    let mut out = vec![None; rows];
    for (c, r) in by_col.into_iter().enumerate() {
        out[r] = Some(c);
    }
    Ok(out)
}

/// `n ≤ m`; returns the column of each row.
fn solve_wide<T: Scalar>(a: impl Fn(usize, usize) -> T, n: usize, m: usize) -> Vec<usize> {
    // 1-based potentials; column 0 is a virtual source
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![T::infinity(); m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = T::infinity();
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut rows = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            rows[p[j] - 1] = j - 1;
        }
    }
    rows
}
