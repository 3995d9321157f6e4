//! Dense LDLᵀ factorizations for small symmetric positive-definite matrices.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
}

/// `A = L · diag(d) · Lᵀ` with `L` lower unitriangular.
///
/// Only the lower triangle of `a` is read.
pub fn ldl_lower(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>), LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    let mut l = DMatrix::<f64>::identity(n, n);
    let mut d = DVector::<f64>::zeros(n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if pivot.is_nan() || pivot <= 0.0 || !pivot.is_finite() {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot });
        }
        d[j] = pivot;
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = v / pivot;
        }
    }
    Ok((l, d))
}

/// `A = U · diag(d) · Uᵀ` with `U` upper unitriangular.
///
/// Reverses row and column order, runs [`ldl_lower`], and reverses back:
/// if `J` is the exchange matrix and `JAJ = L D Lᵀ`, then
/// `A = (JLJ)(JDJ)(JLJ)ᵀ` with `JLJ` upper unitriangular.
pub fn ldl_upper(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>), LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    let rev = |m: &DMatrix<f64>| DMatrix::from_fn(n, n, |i, j| m[(n - 1 - i, n - 1 - j)]);
    let (l, d) = ldl_lower(&rev(a)).map_err(|e| match e {
        LinalgError::NotPositiveDefinite { index, pivot } => LinalgError::NotPositiveDefinite {
            index: n - 1 - index,
            pivot,
        },
        other => other,
    })?;
    let u = rev(&l);
    let d = DVector::from_fn(n, |i, _| d[n - 1 - i]);
    Ok((u, d))
}
