//! The sparsest-permutation search.
//!
//! For an ordering `π` of the variables, `G_π` has the edge `π(i) → π(j)`
//! (`i < j`) exactly when `X_π(i)` and `X_π(j)` are dependent given the
//! other variables placed before `π(j)`. SP returns every `G_π` with the
//! fewest edges and groups them into Markov equivalence classes.
//!
//! The parents of a vertex in `G_π` depend only on the *set* of vertices
//! placed before it, not on their order. [`ScanMode::Pruned`] and
//! [`ScanMode::Lookahead`] exploit this by tabulating `parents(v, P)` once
//! for every vertex and prefix set; [`ScanMode::Exhaustive`] builds every
//! `G_π` from scratch and serves as the reference.
//!
//! [`sp_search_cholesky`] runs the same search on a Gaussian covariance
//! through upper Cholesky factors of the permuted precision matrix.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};
use thiserror::Error;

use crate::graph::json::{edges_json, pattern_json};
use crate::graph::{pattern_of, Dag, EquivClassPattern, LabelBase, Permutation, VertexSet};
use crate::linalg::{ldl_upper, LinalgError};
use crate::oracle::{CiBackend, CovarianceMatrix, OracleError, PrecisionMatrix, SpdMatrix};
use crate::par::map_jobs;

pub const DEFAULT_MAX_P: usize = 9;
pub const DEFAULT_CHOL_TOL: f64 = 1e-7;
/// No configuration may raise the cap beyond this; the prefix tables hold
/// `p · 2^p` entries.
pub const HARD_MAX_P: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpError {
    #[error("p = {p} exceeds the permutation-search cap of {cap}; raise it with --max-p (at most {HARD_MAX_P})")]
    Capacity { p: usize, cap: usize },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanMode {
    /// Builds `G_π` for all `p!` orderings, one CI query per pair.
    Exhaustive,
    /// Depth-first over prefixes; abandons a prefix once its edge count
    /// exceeds the best complete count seen so far.
    Pruned,
    /// Exact dynamic program over prefix sets; explores only optimal prefixes.
    #[default]
    Lookahead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpConfig {
    pub max_p: usize,
    /// Worker threads; 0 uses the global pool.
    pub threads: usize,
    pub mode: ScanMode,
    /// Seed the pruning bound with a greedy ordering that always appends the
    /// vertex with the fewest parents. Only affects [`ScanMode::Pruned`].
    pub greedy_seed: bool,
    /// Order in which vertices are tried; the result does not depend on it.
    pub vertex_order: Option<Vec<usize>>,
}

impl Default for SpConfig {
    fn default() -> Self {
        SpConfig {
            max_p: DEFAULT_MAX_P,
            threads: 0,
            mode: ScanMode::default(),
            greedy_seed: false,
            vertex_order: None,
        }
    }
}

impl SpConfig {
    fn check(&self, p: usize) -> Result<Vec<usize>, SpError> {
        if self.max_p > HARD_MAX_P {
            return Err(SpError::InvalidConfig(format!(
                "max_p = {} exceeds the hard limit {HARD_MAX_P}",
                self.max_p
            )));
        }
        if p > self.max_p {
            return Err(SpError::Capacity { p, cap: self.max_p });
        }
        match &self.vertex_order {
            None => Ok((0..p).collect()),
            Some(order) => Permutation::new(order.clone())
                .ok()
                .filter(|o| o.len() == p)
                .map(Vec::from)
                .ok_or_else(|| {
                    SpError::InvalidConfig(format!("vertex_order {order:?} is not a permutation of 0..{p}"))
                }),
        }
    }
}

/// Outcome of a search. `winners` and `classes` are sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpResult {
    pub min_edges: usize,
    /// Distinct labeled DAGs attaining `min_edges`.
    pub winners: Vec<Dag>,
    pub classes: Vec<EquivClassPattern>,
    pub unique_class: bool,
    /// Orderings covered by the search, `p!`.
    pub permutations_scanned: u64,
    /// Orderings whose `G_π` attains `min_edges`.
    pub optimal_permutations: u64,
}

impl SpResult {
    fn from_incumbent(p: usize, inc: Incumbent) -> SpResult {
        let winners: Vec<Dag> = inc.winners.into_iter().map(Dag::from_parents_unchecked).collect();
        let classes: BTreeSet<EquivClassPattern> = winners.iter().map(pattern_of).collect();
        SpResult {
            min_edges: inc.best,
            unique_class: classes.len() == 1,
            classes: classes.into_iter().collect(),
            winners,
            permutations_scanned: factorial(p),
            optimal_permutations: inc.count,
        }
    }

    pub fn contains_class(&self, pattern: &EquivClassPattern) -> bool {
        self.classes.binary_search(pattern).is_ok()
    }

    /// Winners belonging to `pattern`.
    pub fn members<'a>(&'a self, pattern: &'a EquivClassPattern) -> impl Iterator<Item = &'a Dag> {
        self.winners.iter().filter(move |g| &pattern_of(g) == pattern)
    }

    pub fn to_json(&self, base: LabelBase) -> Value {
        json!({
            "min_edges": self.min_edges,
            "winners": self.winners.iter().map(|g| edges_json(g, base)).collect::<Vec<_>>(),
            "classes": self.classes.iter().map(|c| pattern_json(c, base)).collect::<Vec<_>>(),
            "unique_class": self.unique_class,
            "permutations_scanned": self.permutations_scanned,
            "optimal_permutations": self.optimal_permutations,
        })
    }
}

fn factorial(p: usize) -> u64 {
    (1..=p as u64).product()
}

/// Running minimum over complete orderings; winners keyed by parent vectors.
struct Incumbent {
    best: usize,
    winners: BTreeSet<Vec<VertexSet>>,
    count: u64,
}

impl Incumbent {
    fn new(bound: usize) -> Self {
        Incumbent {
            best: bound,
            winners: BTreeSet::new(),
            count: 0,
        }
    }

    fn offer(&mut self, cost: usize, parents: impl FnOnce() -> Vec<VertexSet>) {
        if cost < self.best {
            self.best = cost;
            self.winners.clear();
            self.count = 0;
        }
        if cost == self.best {
            self.winners.insert(parents());
            self.count += 1;
        }
    }

    fn merge(mut self, other: Incumbent) -> Incumbent {
        if other.best < self.best {
            return other;
        }
        if other.best == self.best {
            self.winners.extend(other.winners);
            self.count += other.count;
        }
        self
    }
}

/// `G_π` under the given CI backend.
///
/// # Panics
///
/// If `pi` and `ci` disagree on the number of variables.
pub fn build_dag_for_permutation(pi: &Permutation, ci: &dyn CiBackend) -> Dag {
    assert_eq!(pi.len(), ci.p(), "permutation length must equal backend dimension");
    let mut parents = vec![VertexSet::EMPTY; pi.len()];
    let mut before = VertexSet::EMPTY;
    for &v in pi.as_slice() {
        parents[v] = parents_given(ci, v, before);
        before.insert(v);
    }
    Dag::from_parents_unchecked(parents)
}

fn parents_given(ci: &dyn CiBackend, v: usize, before: VertexSet) -> VertexSet {
    before
        .iter()
        .filter(|&u| !ci.is_independent(u, v, before.without(u)))
        .collect()
}

/// `parents(v, P)` for every vertex `v` and every `P ⊆ V∖{v}`.
struct ParentTable {
    p: usize,
    entries: Vec<VertexSet>,
}

impl ParentTable {
    fn build(ci: &dyn CiBackend, threads: usize) -> Self {
        let p = ci.p();
        let size = 1usize << p;
        let rows = map_jobs(threads, (0..p).collect(), |v| {
            let others = VertexSet::full(p).without(v);
            let mut row = vec![VertexSet::EMPTY; size];
            for s in others.subsets() {
                row[s.bits() as usize] = parents_given(ci, v, s);
            }
            row
        });
        ParentTable {
            p,
            entries: rows.concat(),
        }
    }

    fn get(&self, v: usize, before: VertexSet) -> VertexSet {
        self.entries[(v << self.p) | before.bits() as usize]
    }
}

pub fn sp_search(ci: &dyn CiBackend) -> Result<SpResult, SpError> {
    sp_search_with(ci, &SpConfig::default())
}

pub fn sp_search_with(ci: &dyn CiBackend, cfg: &SpConfig) -> Result<SpResult, SpError> {
    let p = ci.p();
    let order = cfg.check(p)?;
    let inc = match cfg.mode {
        ScanMode::Exhaustive => scan_orderings(&order, cfg.threads, |pi| {
            build_dag_for_permutation(pi, ci).parent_sets().to_vec()
        }),
        ScanMode::Pruned => {
            let table = ParentTable::build(ci, cfg.threads);
            pruned(&table, &order, cfg)
        }
        ScanMode::Lookahead => {
            let table = ParentTable::build(ci, cfg.threads);
            lookahead(&table, &order)
        }
    };
    Ok(SpResult::from_incumbent(p, inc))
}

/// Visits all orderings, split statically by first vertex.
fn scan_orderings<F>(order: &[usize], threads: usize, build: F) -> Incumbent
where
    F: Fn(&Permutation) -> Vec<VertexSet> + Sync + Send,
{
    let p = order.len();
    if p == 0 {
        let mut inc = Incumbent::new(usize::MAX);
        inc.offer(0, Vec::new);
        return inc;
    }
    let parts = map_jobs(threads, (0..p).collect(), |first| {
        let mut inc = Incumbent::new(usize::MAX);
        let mut idx: Vec<usize> = std::iter::once(first).chain((0..p).filter(|&i| i != first)).collect();
        loop {
            let pi = Permutation::new(idx.iter().map(|&i| order[i]).collect())
                .expect("index permutation maps to a permutation");
            let parents = build(&pi);
            let cost = parents.iter().map(|s| s.len()).sum();
            inc.offer(cost, || parents);
            if !next_permutation(&mut idx[1..]) {
                break;
            }
        }
        inc
    });
    parts.into_iter().reduce(Incumbent::merge).expect("at least one job")
}

fn next_permutation(xs: &mut [usize]) -> bool {
    let n = xs.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && xs[i - 1] >= xs[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while xs[j] <= xs[i - 1] {
        j -= 1;
    }
    xs.swap(i - 1, j);
    xs[i..].reverse();
    true
}

fn greedy_bound(table: &ParentTable, order: &[usize]) -> usize {
    let mut before = VertexSet::EMPTY;
    let mut cost = 0;
    for _ in 0..order.len() {
        let (v, c) = order
            .iter()
            .filter(|&&v| !before.contains(v))
            .map(|&v| (v, table.get(v, before).len()))
            .min_by_key(|&(_, c)| c)
            .expect("a vertex remains");
        cost += c;
        before.insert(v);
    }
    cost
}

fn pruned(table: &ParentTable, order: &[usize], cfg: &SpConfig) -> Incumbent {
    let p = order.len();
    let bound = if cfg.greedy_seed {
        greedy_bound(table, order)
    } else {
        usize::MAX
    };
    if p == 0 {
        let mut inc = Incumbent::new(bound);
        inc.offer(0, Vec::new);
        return inc;
    }

    fn dfs(
        table: &ParentTable,
        order: &[usize],
        before: VertexSet,
        cost: usize,
        parents: &mut Vec<VertexSet>,
        inc: &mut Incumbent,
    ) {
        if cost > inc.best {
            return;
        }
        if before.len() == order.len() {
            inc.offer(cost, || parents.clone());
            return;
        }
        for &v in order {
            if before.contains(v) {
                continue;
            }
            let pa = table.get(v, before);
            parents[v] = pa;
            dfs(table, order, before.with(v), cost + pa.len(), parents, inc);
        }
    }

    let parts = map_jobs(cfg.threads, order.to_vec(), |first| {
        let mut inc = Incumbent::new(bound);
        let mut parents = vec![VertexSet::EMPTY; p];
        let pa = table.get(first, VertexSet::EMPTY);
        parents[first] = pa;
        dfs(
            table,
            order,
            VertexSet::singleton(first),
            pa.len(),
            &mut parents,
            &mut inc,
        );
        inc
    });
    parts.into_iter().reduce(Incumbent::merge).expect("at least one job")
}

/// `h(P)`: fewest edges any completion of a prefix set `P` can add. The
/// optimal orderings are exactly the paths from `∅` that follow `h`.
fn lookahead(table: &ParentTable, order: &[usize]) -> Incumbent {
    let p = order.len();
    let full = VertexSet::full(p);
    let mut h = vec![0usize; 1 << p];
    for bits in (0..full.bits()).rev() {
        let before = VertexSet::from_bits(bits);
        h[bits as usize] = full
            .difference(before)
            .iter()
            .map(|v| table.get(v, before).len() + h[before.with(v).bits() as usize])
            .min()
            .expect("a vertex remains");
    }

    type Completions = Arc<(BTreeSet<Vec<VertexSet>>, u64)>;

    fn completions(
        table: &ParentTable,
        order: &[usize],
        h: &[usize],
        before: VertexSet,
        memo: &mut HashMap<u64, Completions>,
    ) -> Completions {
        if let Some(c) = memo.get(&before.bits()) {
            return c.clone();
        }
        let p = order.len();
        let mut out = BTreeSet::new();
        let mut count = 0u64;
        if before.len() == p {
            out.insert(vec![VertexSet::EMPTY; p]);
            count = 1;
        } else {
            for &v in order {
                if before.contains(v) {
                    continue;
                }
                let pa = table.get(v, before);
                let next = before.with(v);
                if pa.len() + h[next.bits() as usize] != h[before.bits() as usize] {
                    continue;
                }
                let rest = completions(table, order, h, next, memo);
                count += rest.1;
                for c in &rest.0 {
                    let mut c = c.clone();
                    c[v] = pa;
                    out.insert(c);
                }
            }
        }
        let c = Arc::new((out, count));
        memo.insert(before.bits(), c.clone());
        c
    }

    let mut memo = HashMap::new();
    let root = completions(table, order, &h, VertexSet::EMPTY, &mut memo);
    drop(memo);
    let (winners, count) = Arc::try_unwrap(root).unwrap_or_else(|a| (*a).clone());
    Incumbent {
        best: h[0],
        winners,
        count,
    }
}

/// `K^π`: the precision matrix `Σ⁻¹` with rows and columns permuted by `π`.
pub fn permuted_precision(sigma: &CovarianceMatrix, pi: &Permutation) -> Result<PrecisionMatrix, SpError> {
    Ok(sigma.inverse()?.permuted(pi))
}

/// `K = U · diag(d) · Uᵀ` with `U` upper unitriangular.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    pub u: DMatrix<f64>,
    pub d: DVector<f64>,
    /// `nonzero_mask[(i, j)]` for `i < j`: the scaled entry exceeds the tolerance.
    pub nonzero_mask: DMatrix<bool>,
}

impl CholeskyFactor {
    /// `|U_ij| · sqrt(d_j / d_i)`, invariant under rescaling the variables.
    pub fn scaled(&self, i: usize, j: usize) -> f64 {
        self.u[(i, j)].abs() * (self.d[j] / self.d[i]).sqrt()
    }

    /// Strict-upper entries marked nonzero.
    pub fn nonzeros(&self) -> usize {
        self.nonzero_mask.iter().filter(|&&b| b).count()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&self.d) * self.u.transpose()
    }
}

pub fn upper_cholesky(k: &SpdMatrix, chol_tol: f64) -> Result<CholeskyFactor, SpError> {
    let (u, d) = ldl_upper(k.as_matrix())?;
    Ok(mask_factor(u, d, chol_tol))
}

fn mask_factor(u: DMatrix<f64>, d: DVector<f64>, chol_tol: f64) -> CholeskyFactor {
    let n = u.nrows();
    let mut f = CholeskyFactor {
        u,
        d,
        nonzero_mask: DMatrix::from_element(n, n, false),
    };
    for j in 0..n {
        for i in 0..j {
            f.nonzero_mask[(i, j)] = f.scaled(i, j) > chol_tol;
        }
    }
    f
}

pub fn sp_search_cholesky(sigma: &CovarianceMatrix, chol_tol: f64) -> Result<SpResult, SpError> {
    sp_search_cholesky_with(sigma, chol_tol, &SpConfig::default())
}

/// Scans every ordering `π`, factoring `K^π` and reading `G_π` off the
/// nonzero pattern of `U^π`. The scan mode in `cfg` is ignored.
pub fn sp_search_cholesky_with(sigma: &CovarianceMatrix, chol_tol: f64, cfg: &SpConfig) -> Result<SpResult, SpError> {
    if !(chol_tol > 0.0 && chol_tol.is_finite()) {
        return Err(SpError::InvalidConfig(format!(
            "chol_tol must be positive, got {chol_tol}"
        )));
    }
    let p = sigma.dim();
    let order = cfg.check(p)?;
    let k = sigma.inverse()?;
    let inc = scan_orderings(&order, cfg.threads, |pi| {
        let kp = k.permuted(pi);
        let (u, d) = ldl_upper(kp.as_matrix()).expect("a permuted SPD matrix stays SPD");
        let f = mask_factor(u, d, chol_tol);
        let mut parents = vec![VertexSet::EMPTY; p];
        for j in 0..p {
            for i in 0..j {
                if f.nonzero_mask[(i, j)] {
                    parents[pi.at(j)].insert(pi.at(i));
                }
            }
        }
        parents
    });
    Ok(SpResult::from_incumbent(p, inc))
}
