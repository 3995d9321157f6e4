//! Conditional-independence oracles.
//!
//! Every learner in this crate talks to the data only through [`CiBackend`]:
//! "is `X_j ⫫ X_k | X_S`?". Backends answer from a known DAG
//! ([`DsepBackend`]), a hand-written list ([`ExplicitBackend`]), a known
//! covariance ([`GaussianExactBackend`], [`LambdaBackend`]) or a sample
//! ([`FisherZBackend`]).

mod backends;
mod cache;
pub mod io;
mod matrix;

use std::sync::Arc;

use thiserror::Error;

use crate::graph::{all_triples, GraphError, TripleSet, VertexSet};

pub use backends::{
    fisher_critical_value, DsepBackend, ExplicitBackend, FisherZBackend, GaussianExactBackend, LambdaBackend,
};
pub use cache::CachedBackend;
pub(crate) use matrix::partial_correlation_raw;
pub use matrix::{partial_correlation, CovarianceMatrix, PrecisionMatrix, SampleMatrix, SpdMatrix, SYMMETRY_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NotFinite,
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("sub-matrix on variables {0:?} is singular")]
    SingularSubset(Vec<usize>),
    #[error("invalid CI query: {0}")]
    InvalidQuery(String),
    #[error("malformed CI triple: {0}")]
    MalformedTriple(String),
    #[error("invalid test configuration: {0}")]
    InvalidConfig(String),
    #[error("sample is empty")]
    EmptySample,
    #[error("need at least p + 4 = {needed} observations for Fisher-z tests, got {n}")]
    TooFewSamples { n: usize, needed: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{0}")]
    Io(String),
}

/// A source of answers to `X_j ⫫ X_k | X_S` queries on `p` variables.
///
/// Implementations must be deterministic and symmetric in `(j, k)`. Callers
/// pass `j != k` with `S` disjoint from both.
pub trait CiBackend: Send + Sync {
    fn p(&self) -> usize;

    fn is_independent(&self, j: usize, k: usize, s: VertexSet) -> bool;
}

impl<T: CiBackend + ?Sized> CiBackend for &T {
    fn p(&self) -> usize {
        (**self).p()
    }

    fn is_independent(&self, j: usize, k: usize, s: VertexSet) -> bool {
        (**self).is_independent(j, k, s)
    }
}

impl<T: CiBackend + ?Sized> CiBackend for Box<T> {
    fn p(&self) -> usize {
        (**self).p()
    }

    fn is_independent(&self, j: usize, k: usize, s: VertexSet) -> bool {
        (**self).is_independent(j, k, s)
    }
}

impl<T: CiBackend + ?Sized> CiBackend for Arc<T> {
    fn p(&self) -> usize {
        (**self).p()
    }

    fn is_independent(&self, j: usize, k: usize, s: VertexSet) -> bool {
        (**self).is_independent(j, k, s)
    }
}

/// Test size and zero threshold shared by the Gaussian backends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestConfig {
    /// Size of each Fisher-z test, in `(0, 1)`.
    pub alpha: f64,
    /// `|ρ| ≤ zero_tol` counts as a zero partial correlation in exact backends.
    pub zero_tol: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            alpha: 0.01,
            zero_tol: 1e-9,
        }
    }
}

impl TestConfig {
    pub fn new(alpha: f64, zero_tol: f64) -> Result<Self, OracleError> {
        let cfg = TestConfig { alpha, zero_tol };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_alpha(alpha: f64) -> Result<Self, OracleError> {
        TestConfig::new(alpha, TestConfig::default().zero_tol)
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(OracleError::InvalidConfig(format!(
                "alpha must lie in (0,1), got {}",
                self.alpha
            )));
        }
        if self.zero_tol.is_nan() || self.zero_tol <= 0.0 {
            return Err(OracleError::InvalidConfig(format!(
                "zero_tol must be positive, got {}",
                self.zero_tol
            )));
        }
        Ok(())
    }
}

/// All independences a backend reports, over every `(j < k, S)`.
pub fn ci_set(ci: &dyn CiBackend) -> TripleSet {
    let mut out = TripleSet::new(ci.p());
    for t in all_triples(ci.p()) {
        if ci.is_independent(t.j, t.k, t.s) {
            out.insert(t);
        }
    }
    out
}
