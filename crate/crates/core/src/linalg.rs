//! Dense linear-algebra helpers over column lists, backed by nalgebra.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold for deciding linear independence.
pub const RANK_TOL: f64 = 1e-9;

/// Builds a `rows x cols.len()` matrix from column vectors, zero-padding to
/// at least `min_rows` rows.
fn from_columns(rows: usize, cols: &[Vec<f64>], min_rows: usize) -> DMatrix<f64> {
    let r = rows.max(min_rows);
    DMatrix::from_fn(r, cols.len(), |i, j| if i < rows { cols[j][i] } else { 0.0 })
}

/// Singular values of the matrix whose columns are `cols`, largest first.
pub fn singular_values(rows: usize, cols: &[Vec<f64>]) -> Vec<f64> {
    if cols.is_empty() || rows == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = from_columns(rows, cols, 0)
        .singular_values()
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank: number of singular values above `rel_tol * sigma_max`.
/// A matrix with more columns than rows always has rank below its column count.
pub fn rank(rows: usize, cols: &[Vec<f64>], rel_tol: f64) -> usize {
    let sv = singular_values(rows, cols);
    let Some(&top) = sv.first() else { return 0 };
    if top <= 0.0 || !top.is_finite() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// A unit vector `phi` with `sum_i phi_i cols[i]` as small as possible: the
/// right singular vector for the smallest singular value of the (padded)
/// square arrangement.
pub fn null_vector(rows: usize, cols: &[Vec<f64>]) -> Option<Vec<f64>> {
    let m = cols.len();
    if m == 0 {
        return None;
    }
    let a = from_columns(rows, cols, m);
    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))?;
    Some(v_t.row(idx).iter().copied().collect())
}

/// Least-squares solution of `sum_i x_i cols[i] = b` together with the
/// infinity-norm residual.
pub fn least_squares(rows: usize, cols: &[Vec<f64>], b: &[f64]) -> Option<(Vec<f64>, f64)> {
    if cols.is_empty() {
        let res = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        return Some((Vec::new(), res));
    }
    let a = from_columns(rows, cols, 0);
    let rhs = DVector::from_column_slice(b);
    let square = (cols.len() == rows).then(|| a.clone().lu().solve(&rhs)).flatten();
    let x = match square {
        Some(x) => x,
        None => a.clone().svd(true, true).solve(&rhs, 1e-14).ok()?,
    };
    let r = &a * &x - &rhs;
    let res = r.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Some((x.iter().copied().collect(), res))
}

/// Solves the square system `A x = b` (row-major `a`) by LU with partial pivoting.
pub fn solve_square(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    let x = m.lu().solve(&DVector::from_column_slice(b))?;
    x.iter().all(|v| v.is_finite()).then(|| x.iter().copied().collect())
}
