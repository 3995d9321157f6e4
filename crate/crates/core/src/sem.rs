//! Random linear Gaussian structural equation models
//! `X_k = Σ_j a_jk X_j + ε_k` with independent `ε_k ~ N(0, σ_k²)`.
//!
//! Gaussian draws use the ziggurat sampler of `rand_distr::StandardNormal`
//! on a ChaCha8 stream, so a seed fixes every matrix bit for bit.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{consistent_order, Dag, GraphError, LabelBase, VertexSet};
use crate::oracle::{partial_correlation, CovarianceMatrix, OracleError, PrecisionMatrix, SampleMatrix, SpdMatrix};

pub const WEIGHT_MIN: f64 = 0.25;
pub const WEIGHT_MAX: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemError {
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid SEM: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("SEM JSON: {0}")]
    Json(String),
}

/// Weighted DAG plus noise variances.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSem {
    dag: Dag,
    weights: BTreeMap<(usize, usize), f64>,
    noise_vars: Vec<f64>,
}

impl LinearSem {
    /// Weight keys must be exactly the edges of `dag`; weights must be finite
    /// and nonzero, variances finite and positive.
    pub fn new(
        dag: Dag,
        weights: impl IntoIterator<Item = ((usize, usize), f64)>,
        noise_vars: Vec<f64>,
    ) -> Result<Self, SemError> {
        let weights: BTreeMap<_, _> = weights.into_iter().collect();
        let edges = dag.edges();
        if weights.len() != edges.len() || edges.iter().any(|e| !weights.contains_key(e)) {
            return Err(SemError::Invalid("weight keys must match the edge set".into()));
        }
        if let Some((e, w)) = weights.iter().find(|(_, w)| !(w.is_finite() && **w != 0.0)) {
            return Err(SemError::Invalid(format!(
                "weight {w} on {e:?} must be finite and nonzero"
            )));
        }
        if noise_vars.len() != dag.p() {
            return Err(SemError::Invalid(format!(
                "{} noise variances for {} variables",
                noise_vars.len(),
                dag.p()
            )));
        }
        if noise_vars.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(SemError::Invalid("noise variances must be positive".into()));
        }
        Ok(LinearSem {
            dag,
            weights,
            noise_vars,
        })
    }

    pub fn p(&self) -> usize {
        self.dag.p()
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn weight(&self, j: usize, k: usize) -> Option<f64> {
        self.weights.get(&(j, k)).copied()
    }

    pub fn weights(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.weights
    }

    pub fn noise_vars(&self) -> &[f64] {
        &self.noise_vars
    }

    pub fn with_weight(&self, j: usize, k: usize, w: f64) -> Result<LinearSem, SemError> {
        if !self.weights.contains_key(&(j, k)) {
            return Err(SemError::Invalid(format!("({j},{k}) is not an edge")));
        }
        let mut weights = self.weights.clone();
        weights.insert((j, k), w);
        LinearSem::new(self.dag.clone(), weights, self.noise_vars.clone())
    }

    /// `A` with `A[(j, k)] = a_jk`.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let p = self.p();
        let mut a = DMatrix::zeros(p, p);
        for (&(j, k), &w) in &self.weights {
            a[(j, k)] = w;
        }
        a
    }

    pub fn to_json(&self, base: LabelBase) -> String {
        let o = base.offset();
        let file = SemFile {
            p: self.p(),
            base: Some(o),
            edges: self.weights.iter().map(|(&(j, k), &w)| (j + o, k + o, w)).collect(),
            noise_vars: self.noise_vars.clone(),
        };
        serde_json::to_string_pretty(&file).expect("plain data serializes")
    }

    /// Reads `{p, edges: [[j, k, w], ...], noise_vars: [...]}`. Labels are
    /// 1-based if `base` is 1 or, without `base`, if some label equals `p`.
    pub fn from_json(text: &str) -> Result<(LinearSem, LabelBase), SemError> {
        let file: SemFile = serde_json::from_str(text).map_err(|e| SemError::Json(e.to_string()))?;
        let base = match file.base {
            Some(0) => LabelBase::Zero,
            Some(1) => LabelBase::One,
            Some(b) => return Err(SemError::Json(format!("base must be 0 or 1, got {b}"))),
            None if file.edges.iter().any(|&(j, k, _)| j == file.p || k == file.p) => LabelBase::One,
            None => LabelBase::Zero,
        };
        let o = base.offset();
        let mut edges = Vec::with_capacity(file.edges.len());
        for &(j, k, w) in &file.edges {
            if j < o || k < o {
                return Err(SemError::Json(format!("label below base {o} in edge [{j},{k}]")));
            }
            edges.push(((j - o, k - o), w));
        }
        let dag = Dag::new(file.p, edges.iter().map(|&(e, _)| e))?;
        Ok((LinearSem::new(dag, edges, file.noise_vars)?, base))
    }
}

#[derive(Serialize, Deserialize)]
struct SemFile {
    p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<usize>,
    edges: Vec<(usize, usize, f64)>,
    noise_vars: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub p: usize,
    /// Expected number of neighbors per vertex; edge probability is
    /// `expected_nbhd / (p - 1)`.
    pub expected_nbhd: f64,
    pub seed: u64,
    pub n: usize,
    /// Common noise variance σ².
    pub noise_var: f64,
}

impl GenConfig {
    pub fn new(p: usize, expected_nbhd: f64, seed: u64, n: usize) -> Result<Self, SemError> {
        let cfg = GenConfig {
            p,
            expected_nbhd,
            seed,
            n,
            noise_var: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SemError> {
        let bad = |m: String| Err(SemError::InvalidConfig(m));
        if self.p < 2 {
            return bad(format!("p must be at least 2, got {}", self.p));
        }
        let max = (self.p - 1) as f64;
        if !(self.expected_nbhd > 0.0 && self.expected_nbhd <= max) {
            return bad(format!(
                "expected_nbhd must lie in (0, {max}], got {}",
                self.expected_nbhd
            ));
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return bad(format!("noise_var must be positive, got {}", self.noise_var));
        }
        Ok(())
    }

    pub fn edge_probability(&self) -> f64 {
        (self.expected_nbhd / (self.p - 1) as f64).min(1.0)
    }
}

/// Seeded generator used throughout the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a master seed with coordinates into an independent stream seed.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix64(master), |acc, &c| splitmix64(acc ^ splitmix64(c)))
}

/// Each pair `j < k` becomes the edge `j → k` with the configured probability.
pub fn random_dag<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> Dag {
    let q = cfg.edge_probability();
    let mut parents = vec![VertexSet::EMPTY; cfg.p];
    for (k, pa) in parents.iter_mut().enumerate().skip(1) {
        for j in 0..k {
            if rng.random_bool(q) {
                pa.insert(j);
            }
        }
    }
    Dag::from_parents_unchecked(parents)
}

/// Weights uniform on `[-1, -0.25] ∪ [0.25, 1]`, unit noise variances.
pub fn random_weights<R: Rng + ?Sized>(dag: &Dag, rng: &mut R) -> LinearSem {
    random_weights_with_noise(dag, 1.0, rng)
}

pub fn random_weights_with_noise<R: Rng + ?Sized>(dag: &Dag, noise_var: f64, rng: &mut R) -> LinearSem {
    let weights: Vec<_> = dag
        .edges()
        .into_iter()
        .map(|e| {
            let m = rng.random_range(WEIGHT_MIN..=WEIGHT_MAX);
            (e, if rng.random_bool(0.5) { m } else { -m })
        })
        .collect();
    LinearSem::new(dag.clone(), weights, vec![noise_var; dag.p()]).expect("generated SEM is valid")
}

pub fn random_sem<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> LinearSem {
    let dag = random_dag(cfg, rng);
    random_weights_with_noise(&dag, cfg.noise_var, rng)
}

/// `X = M ε`, rows of `M` filled in topological order.
fn mixing_matrix(sem: &LinearSem) -> DMatrix<f64> {
    let p = sem.p();
    let mut m = DMatrix::<f64>::zeros(p, p);
    for &k in consistent_order(&sem.dag).as_slice() {
        m[(k, k)] = 1.0;
        for j in sem.dag.parents(k) {
            let w = sem.weights[&(j, k)];
            let row = m.row(j) * w;
            let mut target = m.row_mut(k);
            target += row;
        }
    }
    m
}

/// `Σ = (I − A)⁻ᵀ D (I − A)⁻¹` with `D = diag(σ²)`.
pub fn covariance_of(sem: &LinearSem) -> Result<CovarianceMatrix, SemError> {
    let m = mixing_matrix(sem);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sem.noise_vars.clone()));
    Ok(SpdMatrix::new(&m * d * m.transpose())?)
}

/// `K = (I − A) D⁻¹ (I − A)ᵀ`.
pub fn precision_of(sem: &LinearSem) -> Result<PrecisionMatrix, SemError> {
    let p = sem.p();
    let i_a = DMatrix::identity(p, p) - sem.weight_matrix();
    let dinv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        p,
        sem.noise_vars.iter().map(|v| 1.0 / v),
    ));
    Ok(SpdMatrix::new(&i_a * dinv * i_a.transpose())?)
}

/// `n` rows by ancestral simulation. Noise is drawn row by row, vertices in
/// topological order.
pub fn sample<R: Rng + ?Sized>(sem: &LinearSem, n: usize, rng: &mut R) -> SampleMatrix {
    let p = sem.p();
    let order = consistent_order(&sem.dag);
    let sd: Vec<f64> = sem.noise_vars.iter().map(|v| v.sqrt()).collect();
    let parents: Vec<Vec<(usize, f64)>> = (0..p)
        .map(|k| sem.dag.parents(k).iter().map(|j| (j, sem.weights[&(j, k)])).collect())
        .collect();
    let mut data = DMatrix::<f64>::zeros(n, p);
    for i in 0..n {
        for &k in order.as_slice() {
            let z: f64 = rng.sample(StandardNormal);
            let mut x = sd[k] * z;
            for &(j, w) in &parents[k] {
                x += w * data[(i, j)];
            }
            data[(i, k)] = x;
        }
    }
    SampleMatrix::new(data).expect("finite draws")
}

/// Finds a weight for edge `edge` that makes `ρ(a, b | s)` vanish.
///
/// Scans `w ∈ [-range, range]`, skipping `|w| < min_abs`, for a sign change
/// of the partial correlation and refines it by bisection. Returns the SEM
/// with the new weight and the residual `|ρ|`.
pub fn solve_cancellation(
    sem: &LinearSem,
    edge: (usize, usize),
    (a, b, s): (usize, usize, VertexSet),
    range: f64,
    min_abs: f64,
) -> Option<(LinearSem, f64)> {
    let rho = |w: f64| -> Option<f64> {
        let cand = sem.with_weight(edge.0, edge.1, w).ok()?;
        let sigma = covariance_of(&cand).ok()?;
        partial_correlation(&sigma, a, b, s).ok()
    };
    const STEPS: usize = 400;
    let grid: Vec<f64> = (0..=STEPS)
        .map(|i| -range + 2.0 * range * i as f64 / STEPS as f64)
        .filter(|w| w.abs() >= min_abs)
        .collect();
    for pair in grid.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if lo < 0.0 && hi > 0.0 {
            continue;
        }
        let (Some(flo), Some(fhi)) = (rho(lo), rho(hi)) else {
            continue;
        };
        if flo.signum() == fhi.signum() {
            continue;
        }
        let (mut lo, mut hi, mut flo) = (lo, hi, flo);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = rho(mid)?;
            if fm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        let w = 0.5 * (lo + hi);
        let cand = sem.with_weight(edge.0, edge.1, w).ok()?;
        return Some((cand, rho(w)?.abs()));
    }
    None
}
