use nalgebra::{DMatrix, DVector};

use super::OracleError;
use crate::graph::{Permutation, VertexSet};

/// Symmetric positive-definite matrix: a covariance `Σ` or a precision `K = Σ⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

pub type CovarianceMatrix = SpdMatrix;
pub type PrecisionMatrix = SpdMatrix;

/// Relative asymmetry accepted before a matrix is rejected.
pub const SYMMETRY_TOL: f64 = 1e-12;

impl SpdMatrix {
    /// Validates shape, symmetry and positive definiteness; stores the
    /// symmetrized matrix.
    pub fn new(m: DMatrix<f64>) -> Result<Self, OracleError> {
        if m.nrows() != m.ncols() {
            return Err(OracleError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(OracleError::NotFinite);
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(OracleError::NotSymmetric(asym));
        }
        let sym = (&m + m.transpose()) * 0.5;
        if sym.clone().cholesky().is_none() {
            return Err(OracleError::NotPositiveDefinite);
        }
        Ok(SpdMatrix(sym))
    }

    pub fn from_row_slice(p: usize, values: &[f64]) -> Result<Self, OracleError> {
        if values.len() != p * p {
            return Err(OracleError::NotSquare {
                rows: p,
                cols: values.len() / p.max(1),
            });
        }
        SpdMatrix::new(DMatrix::from_row_slice(p, p, values))
    }

    pub fn identity(p: usize) -> Self {
        SpdMatrix(DMatrix::identity(p, p))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn inverse(&self) -> Result<SpdMatrix, OracleError> {
        let chol = self.0.clone().cholesky().ok_or(OracleError::NotPositiveDefinite)?;
        let inv = chol.inverse();
        Ok(SpdMatrix((&inv + inv.transpose()) * 0.5))
    }

    /// Rows and columns reordered so that entry `(a, b)` is `self[π(a), π(b)]`.
    pub fn permuted(&self, pi: &Permutation) -> SpdMatrix {
        let n = self.dim();
        assert_eq!(pi.len(), n, "permutation length must match dimension");
        SpdMatrix(DMatrix::from_fn(n, n, |a, b| self.0[(pi.at(a), pi.at(b))]))
    }

    /// Correlation matrix with the same zero pattern.
    pub fn correlation(&self) -> SpdMatrix {
        let n = self.dim();
        let sd: Vec<f64> = (0..n).map(|i| self.0[(i, i)].sqrt()).collect();
        SpdMatrix(DMatrix::from_fn(n, n, |i, j| self.0[(i, j)] / (sd[i] * sd[j])))
    }
}

/// `n × p` matrix of observations, one row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: DMatrix<f64>,
    names: Vec<String>,
}

impl SampleMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self, OracleError> {
        let names = (0..data.ncols()).map(|i| format!("X{i}")).collect();
        SampleMatrix::with_names(data, names)
    }

    pub fn with_names(data: DMatrix<f64>, names: Vec<String>) -> Result<Self, OracleError> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(OracleError::EmptySample);
        }
        if names.len() != data.ncols() {
            return Err(OracleError::NotSquare {
                rows: names.len(),
                cols: data.ncols(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(OracleError::NotFinite);
        }
        Ok(SampleMatrix { data, names })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// `Σ̂ = (1/n) Σᵢ X⁽ⁱ⁾X⁽ⁱ⁾ᵀ`, optionally after subtracting column means.
    ///
    /// Returns the raw matrix; it is positive definite only for full-rank data.
    pub fn covariance(&self, center: bool) -> DMatrix<f64> {
        let n = self.n() as f64;
        let centered;
        let x = if center {
            let means: DVector<f64> = self.data.row_mean().transpose();
            centered = DMatrix::from_fn(self.n(), self.p(), |i, j| self.data[(i, j)] - means[j]);
            &centered
        } else {
            &self.data
        };
        let mut s = x.tr_mul(x) / n;
        s = (&s + s.transpose()) * 0.5;
        s
    }
}

/// `corr(X_j, X_k | X_S)` from the Schur complement of `Σ_{S,S}`.
///
/// The 2×2 conditional covariance
/// `Σ_{jk,jk} − Σ_{jk,S} Σ_{S,S}⁻¹ Σ_{S,jk}` is normalized by the square
/// root of its diagonal. The solve uses a Cholesky factorization of `Σ_{S,S}`.
pub fn partial_correlation(sigma: &SpdMatrix, j: usize, k: usize, s: VertexSet) -> Result<f64, OracleError> {
    partial_correlation_raw(sigma.as_matrix(), j, k, s)
}

pub(crate) fn partial_correlation_raw(
    sigma: &DMatrix<f64>,
    j: usize,
    k: usize,
    s: VertexSet,
) -> Result<f64, OracleError> {
    let p = sigma.nrows();
    if j >= p || k >= p || s.bound() > p {
        return Err(OracleError::InvalidQuery(format!(
            "({j},{k}|{s:?}) out of range for p={p}"
        )));
    }
    if j == k || s.contains(j) || s.contains(k) {
        return Err(OracleError::InvalidQuery(format!(
            "({j},{k}|{s:?}) must have distinct endpoints outside the conditioning set"
        )));
    }
    let (cjj, ckk, cjk) = if s.is_empty() {
        (sigma[(j, j)], sigma[(k, k)], sigma[(j, k)])
    } else {
        let idx: Vec<usize> = s.iter().collect();
        let m = idx.len();
        let sss = DMatrix::from_fn(m, m, |a, b| sigma[(idx[a], idx[b])]);
        let ssjk = DMatrix::from_fn(m, 2, |a, b| sigma[(idx[a], if b == 0 { j } else { k })]);
        let chol = sss.cholesky().ok_or_else(|| OracleError::SingularSubset(idx.clone()))?;
        let solved = chol.solve(&ssjk);
        let correction = ssjk.tr_mul(&solved);
        (
            sigma[(j, j)] - correction[(0, 0)],
            sigma[(k, k)] - correction[(1, 1)],
            sigma[(j, k)] - correction[(0, 1)],
        )
    };
    if !(cjj > 0.0 && ckk > 0.0) {
        let mut subset: Vec<usize> = s.iter().collect();
        subset.extend([j, k]);
        subset.sort_unstable();
        return Err(OracleError::SingularSubset(subset));
    }
    Ok(cjk / (cjj * ckk).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(matches!(
            SpdMatrix::new(DMatrix::zeros(2, 3)),
            Err(OracleError::NotSquare { .. })
        ));
        assert!(matches!(
            SpdMatrix::from_row_slice(2, &[1.0, 0.5, 0.4, 1.0]),
            Err(OracleError::NotSymmetric(_))
        ));
        assert!(matches!(
            SpdMatrix::from_row_slice(2, &[1.0, 2.0, 2.0, 1.0]),
            Err(OracleError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn identity_has_zero_partial_correlation() {
        let s = SpdMatrix::identity(3);
        assert_eq!(partial_correlation(&s, 0, 1, VertexSet::EMPTY).unwrap(), 0.0);
        assert_eq!(partial_correlation(&s, 0, 1, VertexSet::singleton(2)).unwrap(), 0.0);
    }

    #[test]
    fn empty_set_is_plain_correlation() {
        let s = SpdMatrix::from_row_slice(2, &[4.0, 1.0, 1.0, 9.0]).unwrap();
        let r = partial_correlation(&s, 0, 1, VertexSet::EMPTY).unwrap();
        assert!((r - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_queries() {
        let s = SpdMatrix::identity(3);
        assert!(partial_correlation(&s, 0, 0, VertexSet::EMPTY).is_err());
        assert!(partial_correlation(&s, 0, 1, VertexSet::singleton(1)).is_err());
        assert!(partial_correlation(&s, 0, 4, VertexSet::EMPTY).is_err());
    }

    #[test]
    fn singular_subset_is_reported() {
        // columns 1 and 2 identical
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.2, 0.2, 1.0, 1.0, 0.2, 1.0, 1.0]);
        let err = partial_correlation_raw(&m, 0, 1, VertexSet::singleton(2)).unwrap_err();
        assert_eq!(err, OracleError::SingularSubset(vec![0, 1, 2]));
    }

    #[test]
    fn permute_and_invert() {
        let s = SpdMatrix::from_row_slice(2, &[1.0, 0.5, 0.5, 1.0]).unwrap();
        let k = s.inverse().unwrap();
        // closed form: 1/(1-0.25) * [[1,-0.5],[-0.5,1]]
        assert!((k.get(0, 0) - 4.0 / 3.0).abs() < 1e-12);
        assert!((k.get(0, 1) + 2.0 / 3.0).abs() < 1e-12);
        let pi = Permutation::new(vec![1, 0]).unwrap();
        let kp = k.permuted(&pi);
        assert_eq!(kp.get(0, 1), k.get(1, 0));
        assert_eq!(kp.permuted(&pi.inverse()), k);
    }
}
