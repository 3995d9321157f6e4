use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use super::{ci_set, partial_correlation, partial_correlation_raw, CiBackend, OracleError};
use super::{CovarianceMatrix, SampleMatrix, TestConfig};
use crate::graph::{d_separated_unchecked, dsep_set, CiTriple, Dag, TripleSet, VertexSet};

/// Answers CI queries by d-separation in a fixed DAG: the oracle of a
/// distribution that is faithful to that DAG.
#[derive(Debug, Clone)]
pub struct DsepBackend {
    dag: Dag,
}

impl DsepBackend {
    pub fn new(dag: Dag) -> Self {
        DsepBackend { dag }
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }
}

impl CiBackend for DsepBackend {
    fn p(&self) -> usize {
        self.dag.p()
    }

    fn is_independent(&self, j: usize, k: usize, s: VertexSet) -> bool {
        d_separated_unchecked(&self.dag, j, k, s)
    }
}

/// A hand-specified set of independences; everything else is dependent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitBackend {
    set: TripleSet,
}

impl ExplicitBackend {
    pub fn new(p: usize, triples: impl IntoIterator<Item = (usize, usize, VertexSet)>) -> Result<Self, OracleError> {
        let mut backend = ExplicitBackend { set: TripleSet::new(p) };
        for (j, k, s) in triples {
            backend.add(j, k, s)?;
        }
        Ok(backend)
    }

    pub fn from_set(set: TripleSet) -> Self {
        ExplicitBackend { set }
    }

    /// The d-separations of `dag`, ready to be edited.
    pub fn from_dag(dag: &Dag) -> Self {
        ExplicitBackend { set: dsep_set(dag) }
    }

    /// Snapshot of another backend's full independence set.
    pub fn from_backend(ci: &dyn CiBackend) -> Self {
        ExplicitBackend { set: ci_set(ci) }
    }

    fn triple(&self, j: usize, k: usize, s: VertexSet) -> Result<CiTriple, OracleError> {
        let p = self.set.p();
        if j >= p || k >= p || !s.is_subset(VertexSet::full(p)) {
            return Err(OracleError::MalformedTriple(format!(
                "({j},{k}|{s:?}) out of range for p={p}"
            )));
        }
        CiTriple::try_new(j, k, s).ok_or_else(|| {
            OracleError::MalformedTriple(format!(
                "({j},{k}|{s:?}) needs distinct endpoints outside the conditioning set"
            ))
        })
    }

    pub fn add(&mut self, j: usize, k: usize, s: VertexSet) -> Result<(), OracleError> {
        let t = self.triple(j, k, s)?;
        self.set.insert(t);
        Ok(())
    }

    pub fn remove(&mut self, j: usize, k: usize, s: VertexSet) -> Result<(), OracleError> {
        let t = self.triple(j, k, s)?;
        if self.set.contains(&t) {
            // TripleSet has no removal; rebuild without t
            let mut next = TripleSet::new(self.set.p());
            for u in self.set.iter().filter(|u| *u != t) {
                next.insert(u);
            }
            self.set = next;
        }
        Ok(())
    }

    pub fn set(&self) -> &TripleSet {
        &self.set
    }
}

impl CiBackend for ExplicitBackend {
    fn p(&self) -> usize {
        self.set.p()
    }

    fn is_independent(&self, j: usize, k: usize, s: VertexSet) -> bool {
        self.set.contains(&CiTriple::new(j, k, s))
    }
}

/// Exact Gaussian oracle: independent iff `|ρ_{jk|S}| ≤ zero_tol`.
#[derive(Debug, Clone)]
pub struct GaussianExactBackend {
    sigma: CovarianceMatrix,
    zero_tol: f64,
}

impl GaussianExactBackend {
    pub fn new(sigma: CovarianceMatrix, cfg: TestConfig) -> Result<Self, OracleError> {
        cfg.validate()?;
        Ok(GaussianExactBackend {
            sigma,
            zero_tol: cfg.zero_tol,
        })
    }

    pub fn sigma(&self) -> &CovarianceMatrix {
        &self.sigma
    }

    pub fn partial_correlation(&self, j: usize, k: usize, s: VertexSet) -> Result<f64, OracleError> {
        partial_correlation(&self.sigma, j, k, s)
    }
}

impl CiBackend for GaussianExactBackend {
    fn p(&self) -> usize {
        self.sigma.dim()
    }

    fn is_independent(&self, j: usize, k: usize, s: VertexSet) -> bool {
        // sub-blocks of an SPD matrix are SPD; a failure here means numerical breakdown
        match partial_correlation(&self.sigma, j, k, s) {
            Ok(r) => r.abs() <= self.zero_tol,
            Err(_) => false,
        }
    }
}

/// Thresholded Gaussian oracle: independent iff `(j,k,S) ∈ Ω_λ`, i.e.
/// `|ρ_{jk|S}| ≤ λ`.
#[derive(Debug, Clone)]
pub struct LambdaBackend {
    sigma: CovarianceMatrix,
    lambda: f64,
}

impl LambdaBackend {
    pub fn new(sigma: CovarianceMatrix, lambda: f64) -> Result<Self, OracleError> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(OracleError::InvalidConfig(format!(
                "lambda must lie in (0,1), got {lambda}"
            )));
        }
        Ok(LambdaBackend { sigma, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl CiBackend for LambdaBackend {
    fn p(&self) -> usize {
        self.sigma.dim()
    }

    fn is_independent(&self, j: usize, k: usize, s: VertexSet) -> bool {
        match partial_correlation(&self.sigma, j, k, s) {
            Ok(r) => r.abs() <= self.lambda,
            Err(_) => false,
        }
    }
}

/// Fisher-z test on sample partial correlations.
///
/// `Σ̂` is computed once. For each query, `ẑ = atanh(ρ̂)` and
/// `T = √(n − |S| − 3)·|ẑ|`; the null (independence) is retained iff
/// `T < Φ⁻¹(1 − α/2)`. Degenerate queries (`|ρ̂| ≥ 1` or a singular
/// conditioning block) are answered "dependent" and counted in
/// [`FisherZBackend::warnings`].
#[derive(Debug)]
pub struct FisherZBackend {
    sigma_hat: DMatrix<f64>,
    n: usize,
    critical: f64,
    alpha: f64,
    warnings: AtomicUsize,
}

impl FisherZBackend {
    pub fn new(data: &SampleMatrix, cfg: TestConfig) -> Result<Self, OracleError> {
        FisherZBackend::with_centering(data, cfg, false)
    }

    pub fn with_centering(data: &SampleMatrix, cfg: TestConfig, center: bool) -> Result<Self, OracleError> {
        cfg.validate()?;
        let needed = data.p() + 4;
        if data.n() < needed {
            return Err(OracleError::TooFewSamples { n: data.n(), needed });
        }
        Ok(FisherZBackend {
            sigma_hat: data.covariance(center),
            n: data.n(),
            critical: fisher_critical_value(cfg.alpha),
            alpha: cfg.alpha,
            warnings: AtomicUsize::new(0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn critical_value(&self) -> f64 {
        self.critical
    }

    pub fn sample_covariance(&self) -> &DMatrix<f64> {
        &self.sigma_hat
    }

    /// Number of degenerate queries seen so far.
    pub fn warnings(&self) -> usize {
        self.warnings.load(Ordering::Relaxed)
    }

    /// The test statistic `T`, or `None` for a degenerate query.
    pub fn statistic(&self, j: usize, k: usize, s: VertexSet) -> Option<f64> {
        let rho = partial_correlation_raw(&self.sigma_hat, j, k, s).ok()?;
        if rho.is_nan() || rho.abs() >= 1.0 {
            return None;
        }
        let dof = self.n as f64 - s.len() as f64 - 3.0;
        Some(dof.sqrt() * rho.atanh().abs())
    }
}

/// `Φ⁻¹(1 − α/2)`.
pub fn fisher_critical_value(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

impl CiBackend for FisherZBackend {
    fn p(&self) -> usize {
        self.sigma_hat.nrows()
    }

    fn is_independent(&self, j: usize, k: usize, s: VertexSet) -> bool {
        match self.statistic(j, k, s) {
            Some(t) => t < self.critical,
            None => {
                self.warnings.fetch_add(1, Ordering::Relaxed);
                false
            }
        }
    }
}
