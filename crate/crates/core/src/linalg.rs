//! Dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tol;

/// Submatrix with the given row and column index lists, in list order.
pub fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn row_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(m.nrows(), |i, _| m.row(i).sum())
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut values: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Inverse of a symmetric positive-definite matrix together with its 1-norm
/// condition number. Fails with `IllConditioned` above [`tol::COND_MAX`].
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or(Error::IllConditioned { estimate: f64::INFINITY })?;
    let inv = chol.inverse();
    let estimate = one_norm(m) * one_norm(&inv);
    if !estimate.is_finite() || estimate > tol::COND_MAX {
        return Err(Error::IllConditioned { estimate });
    }
    Ok(symmetrize(&inv))
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|c| m.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix via a full
/// eigendecomposition. Eigenvalues with `|λ| <= tol::EIG * λ_max` are
/// treated as zero. When `expected_nullity` is given, a different rank is an
/// error rather than being absorbed.
pub fn symmetric_pinv(m: &DMatrix<f64>, expected_nullity: Option<usize>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(m.clone());
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let cutoff = tol::EIG * scale;
    let mut nullity = 0;
    let mut out = DMatrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= cutoff || scale == 0.0 {
            nullity += 1;
            continue;
        }
        let v = eig.eigenvectors.column(k);
        out += (v * v.transpose()) / lambda;
    }
    if let Some(expected) = expected_nullity {
        if nullity != expected {
            return Err(Error::InvariantBreach(format!(
                "expected null space of dimension {expected}, found {nullity}"
            )));
        }
    }
    Ok(symmetrize(&out))
}

/// Effective resistances `R_ij = X_ii + X_jj - 2 X_ij` from a (pseudo-)inverse.
pub fn resistances_from_inverse(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (x[(i, i)] + x[(j, j)] - 2.0 * x[(i, j)]).max(0.0)
        }
    })
}
