//! Brute-force checks of Markov, faithfulness-type, sparsity and minimality
//! conditions for a DAG against a CI backend.
//!
//! Checks that only scan CI triples accept `p ≤ 6`; checks that enumerate
//! every DAG on the vertex set accept `p ≤ 5`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};
use thiserror::Error;

use crate::graph::json::edges_json;
use crate::graph::{
    all_triples, d_separated_unchecked, dsep_set, enumerate_all_dags, pattern_of, triangles, unshielded_triples,
    CiTriple, Dag, GraphError, LabelBase, Pair, VertexSet,
};
use crate::oracle::{ci_set, CiBackend, CovarianceMatrix, LambdaBackend, OracleError};

pub const TRIPLE_CHECK_MAX_P: usize = 6;
pub const ENUMERATION_CHECK_MAX_P: usize = 5;
pub const WITNESS_LIMIT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssumptionError {
    #[error("{check} is limited to p <= {limit}, got p = {p}")]
    Capacity { check: Assumption, p: usize, limit: usize },
    #[error("graph has {graph} vertices but the backend has {backend}")]
    DimensionMismatch { graph: usize, backend: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Assumption {
    Markov,
    Faithfulness,
    Smr,
    Adjacency,
    Orientation,
    Restricted,
    Triangle,
    SgsMinimality,
    PMinimality,
    LambdaSmr,
}

impl Assumption {
    pub const ALL: [Assumption; 10] = [
        Assumption::Markov,
        Assumption::Faithfulness,
        Assumption::Smr,
        Assumption::Adjacency,
        Assumption::Orientation,
        Assumption::Restricted,
        Assumption::Triangle,
        Assumption::SgsMinimality,
        Assumption::PMinimality,
        Assumption::LambdaSmr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Assumption::Markov => "markov",
            Assumption::Faithfulness => "faithfulness",
            Assumption::Smr => "smr",
            Assumption::Adjacency => "adjacency",
            Assumption::Orientation => "orientation",
            Assumption::Restricted => "restricted",
            Assumption::Triangle => "triangle",
            Assumption::SgsMinimality => "sgs-min",
            Assumption::PMinimality => "p-min",
            Assumption::LambdaSmr => "lambda-smr",
        }
    }

    fn limit(self) -> usize {
        match self {
            Assumption::Smr | Assumption::PMinimality | Assumption::LambdaSmr => ENUMERATION_CHECK_MAX_P,
            _ => TRIPLE_CHECK_MAX_P,
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Assumption {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Assumption::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<_> = Assumption::ALL.iter().map(|a| a.name()).collect();
            format!("unknown assumption `{s}`; expected one of {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Triple { triple: CiTriple, reason: String },
    Dag { dag: Dag, reason: String },
}

impl Witness {
    fn to_json(&self, base: LabelBase) -> Value {
        let o = base.offset();
        match self {
            Witness::Triple { triple, reason } => json!({
                "kind": "triple",
                "j": triple.j + o,
                "k": triple.k + o,
                "s": triple.s.iter().map(|v| v + o).collect::<Vec<_>>(),
                "reason": reason,
            }),
            Witness::Dag { dag, reason } => json!({
                "kind": "dag",
                "edges": edges_json(dag, base),
                "reason": reason,
            }),
        }
    }
}

/// `holds` is true exactly when no witness was found. At most
/// [`WITNESS_LIMIT`] witnesses are kept; `total_witnesses` counts all.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssumptionReport {
    pub assumption: Assumption,
    pub holds: bool,
    pub witnesses: Vec<Witness>,
    pub total_witnesses: usize,
}

impl AssumptionReport {
    fn new(assumption: Assumption) -> Self {
        AssumptionReport {
            assumption,
            holds: true,
            witnesses: Vec::new(),
            total_witnesses: 0,
        }
    }

    fn push(&mut self, w: impl FnOnce() -> Witness) {
        self.holds = false;
        self.total_witnesses += 1;
        if self.witnesses.len() < WITNESS_LIMIT {
            self.witnesses.push(w());
        }
    }

    fn triple(&mut self, t: CiTriple, reason: &str) {
        self.push(|| Witness::Triple {
            triple: t,
            reason: reason.to_owned(),
        });
    }

    fn absorb(&mut self, other: AssumptionReport) {
        self.holds &= other.holds;
        self.total_witnesses += other.total_witnesses;
        let room = WITNESS_LIMIT - self.witnesses.len().min(WITNESS_LIMIT);
        self.witnesses.extend(other.witnesses.into_iter().take(room));
    }

    pub fn to_json(&self, base: LabelBase) -> Value {
        json!({
            "assumption": self.assumption.name(),
            "holds": self.holds,
            "total_witnesses": self.total_witnesses,
            "witnesses": self.witnesses.iter().map(|w| w.to_json(base)).collect::<Vec<_>>(),
        })
    }
}

fn guard(check: Assumption, g: &Dag, ci: &dyn CiBackend) -> Result<(), AssumptionError> {
    if g.p() != ci.p() {
        return Err(AssumptionError::DimensionMismatch {
            graph: g.p(),
            backend: ci.p(),
        });
    }
    if g.p() > check.limit() {
        return Err(AssumptionError::Capacity {
            check,
            p: g.p(),
            limit: check.limit(),
        });
    }
    Ok(())
}

fn others(p: usize, j: usize, k: usize) -> VertexSet {
    VertexSet::full(p).without(j).without(k)
}

fn markov_against(check: Assumption, g: &Dag, ci: &dyn CiBackend) -> AssumptionReport {
    let mut r = AssumptionReport::new(check);
    for t in dsep_set(g).iter() {
        if !ci.is_independent(t.j, t.k, t.s) {
            r.triple(t, "d-separated in the graph but dependent in the backend");
        }
    }
    r
}

/// Every d-separation of `g` is an independence of `ci`.
pub fn check_markov(g: &Dag, ci: &dyn CiBackend) -> Result<AssumptionReport, AssumptionError> {
    guard(Assumption::Markov, g, ci)?;
    Ok(markov_against(Assumption::Markov, g, ci))
}

/// The independences of `ci` are exactly the d-separations of `g`.
pub fn check_faithfulness(g: &Dag, ci: &dyn CiBackend) -> Result<AssumptionReport, AssumptionError> {
    guard(Assumption::Faithfulness, g, ci)?;
    let mut r = AssumptionReport::new(Assumption::Faithfulness);
    for t in all_triples(g.p()) {
        let sep = d_separated_unchecked(g, t.j, t.k, t.s);
        let ind = ci.is_independent(t.j, t.k, t.s);
        if sep && !ind {
            r.triple(t, "d-separated in the graph but dependent in the backend");
        } else if !sep && ind {
            r.triple(t, "d-connected in the graph but independent in the backend");
        }
    }
    Ok(r)
}

/// For every edge `j → k`, dependence given every `S ⊆ V∖{j,k}`.
pub fn check_adjacency_faithfulness(g: &Dag, ci: &dyn CiBackend) -> Result<AssumptionReport, AssumptionError> {
    guard(Assumption::Adjacency, g, ci)?;
    let mut r = AssumptionReport::new(Assumption::Adjacency);
    for (j, k) in g.edges() {
        for s in others(g.p(), j, k).subsets() {
            if ci.is_independent(j, k, s) {
                r.triple(CiTriple::new(j, k, s), "adjacent in the graph but independent");
            }
        }
    }
    Ok(r)
}

/// For every unshielded triple `j − ℓ − k` and every `S ⊆ V∖{j,k}` that
/// d-connects `j` and `k`, dependence given `S`.
pub fn check_orientation_faithfulness(g: &Dag, ci: &dyn CiBackend) -> Result<AssumptionReport, AssumptionError> {
    guard(Assumption::Orientation, g, ci)?;
    let mut r = AssumptionReport::new(Assumption::Orientation);
    let ends: BTreeSet<Pair> = unshielded_triples(g)
        .into_iter()
        .map(|t| Pair::new(t.left, t.right))
        .collect();
    for e in ends {
        let (j, k) = (e.lo(), e.hi());
        for s in others(g.p(), j, k).subsets() {
            if !d_separated_unchecked(g, j, k, s) && ci.is_independent(j, k, s) {
                r.triple(
                    CiTriple::new(j, k, s),
                    "ends of an unshielded triple d-connected but independent",
                );
            }
        }
    }
    Ok(r)
}

/// Adjacency- and orientation-faithfulness together.
pub fn check_restricted_faithfulness(g: &Dag, ci: &dyn CiBackend) -> Result<AssumptionReport, AssumptionError> {
    guard(Assumption::Restricted, g, ci)?;
    let mut r = AssumptionReport::new(Assumption::Restricted);
    r.absorb(check_adjacency_faithfulness(g, ci)?);
    r.absorb(check_orientation_faithfulness(g, ci)?);
    Ok(r)
}

/// Faithfulness restricted to pairs inside a triangle of the skeleton.
pub fn check_triangle_faithfulness(g: &Dag, ci: &dyn CiBackend) -> Result<AssumptionReport, AssumptionError> {
    guard(Assumption::Triangle, g, ci)?;
    let mut r = AssumptionReport::new(Assumption::Triangle);
    let pairs: BTreeSet<Pair> = triangles(g)
        .into_iter()
        .flat_map(|[a, b, c]| [Pair::new(a, b), Pair::new(a, c), Pair::new(b, c)])
        .collect();
    for e in pairs {
        let (j, k) = (e.lo(), e.hi());
        for s in others(g.p(), j, k).subsets() {
            let sep = d_separated_unchecked(g, j, k, s);
            if sep != ci.is_independent(j, k, s) {
                r.triple(
                    CiTriple::new(j, k, s),
                    "pair inside a triangle where d-separation and independence disagree",
                );
            }
        }
    }
    Ok(r)
}

/// No proper sub-DAG of `g` is Markov to `ci`. Deleting edges only adds
/// d-separations, so a Markov proper sub-DAG exists iff some single-edge
/// deletion is Markov; witnesses are those deletions.
pub fn check_sgs_minimality(g: &Dag, ci: &dyn CiBackend) -> Result<AssumptionReport, AssumptionError> {
    guard(Assumption::SgsMinimality, g, ci)?;
    let mut r = AssumptionReport::new(Assumption::SgsMinimality);
    let set = ci_set(ci);
    for (j, k) in g.edges() {
        let h = g.without_edge(j, k);
        if dsep_set(&h).is_subset(&set) {
            r.push(|| Witness::Dag {
                dag: h,
                reason: "proper sub-DAG that is still Markov".into(),
            });
        }
    }
    Ok(r)
}

/// `(g*, ci)` is Markov and every other Markov DAG outside `M(g*)` has more
/// edges.
pub fn check_smr(g_star: &Dag, ci: &dyn CiBackend) -> Result<AssumptionReport, AssumptionError> {
    guard(Assumption::Smr, g_star, ci)?;
    Ok(smr_report(Assumption::Smr, g_star, ci)?)
}

fn smr_report(check: Assumption, g_star: &Dag, ci: &dyn CiBackend) -> Result<AssumptionReport, GraphError> {
    let mut r = markov_against(check, g_star, ci);
    let set = ci_set(ci);
    let target = pattern_of(g_star);
    let size = g_star.edge_count();
    for g in enumerate_all_dags(g_star.p())? {
        if g.edge_count() > size || pattern_of(&g) == target {
            continue;
        }
        if dsep_set(&g).is_subset(&set) {
            r.push(|| Witness::Dag {
                dag: g,
                reason: "Markov DAG outside the equivalence class with no more edges".into(),
            });
        }
    }
    Ok(r)
}

/// No Markov DAG has a strict superset of the d-separations of `g`.
pub fn check_p_minimality(g: &Dag, ci: &dyn CiBackend) -> Result<AssumptionReport, AssumptionError> {
    guard(Assumption::PMinimality, g, ci)?;
    let mut r = AssumptionReport::new(Assumption::PMinimality);
    let set = ci_set(ci);
    let own = dsep_set(g);
    let size = g.edge_count();
    for h in enumerate_all_dags(g.p())? {
        // a strict superset forces every edge of h to be an edge of g
        if h.edge_count() > size {
            continue;
        }
        let theirs = dsep_set(&h);
        if theirs.len() > own.len() && own.is_subset(&theirs) && theirs.is_subset(&set) {
            r.push(|| Witness::Dag {
                dag: h,
                reason: "Markov DAG entailing strictly more d-separations".into(),
            });
        }
    }
    Ok(r)
}

/// SMR against the thresholded relations `|ρ(j,k|S)| ≤ λ`.
pub fn check_lambda_strong_smr(
    g: &Dag,
    sigma: &CovarianceMatrix,
    lambda: f64,
) -> Result<AssumptionReport, AssumptionError> {
    let ci = LambdaBackend::new(sigma.clone(), lambda)?;
    guard(Assumption::LambdaSmr, g, &ci)?;
    Ok(smr_report(Assumption::LambdaSmr, g, &ci)?)
}

/// Runs a check by name. `LambdaSmr` expects `ci` to be the thresholded
/// backend already and reduces to SMR against it.
pub fn check(assumption: Assumption, g: &Dag, ci: &dyn CiBackend) -> Result<AssumptionReport, AssumptionError> {
    match assumption {
        Assumption::Markov => check_markov(g, ci),
        Assumption::Faithfulness => check_faithfulness(g, ci),
        Assumption::Smr => check_smr(g, ci),
        Assumption::Adjacency => check_adjacency_faithfulness(g, ci),
        Assumption::Orientation => check_orientation_faithfulness(g, ci),
        Assumption::Restricted => check_restricted_faithfulness(g, ci),
        Assumption::Triangle => check_triangle_faithfulness(g, ci),
        Assumption::SgsMinimality => check_sgs_minimality(g, ci),
        Assumption::PMinimality => check_p_minimality(g, ci),
        Assumption::LambdaSmr => {
            guard(Assumption::LambdaSmr, g, ci)?;
            Ok(smr_report(Assumption::LambdaSmr, g, ci)?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{DsepBackend, ExplicitBackend};

    fn four_cycle() -> Dag {
        Dag::new(4, [(0, 1), (0, 3), (1, 2), (2, 3)]).unwrap()
    }

    fn cancelled() -> ExplicitBackend {
        let mut b = ExplicitBackend::from_dag(&four_cycle());
        b.add(0, 1, VertexSet::singleton(3)).unwrap();
        b
    }

    #[test]
    fn markov_basics() {
        let g = Dag::new(2, [(0, 1)]).unwrap();
        assert!(check_markov(&g, &DsepBackend::new(g.clone())).unwrap().holds);
        let r = check_markov(&Dag::empty(2), &DsepBackend::new(g)).unwrap();
        assert!(!r.holds);
        assert_eq!(
            r.witnesses[0],
            Witness::Triple {
                triple: CiTriple::new(0, 1, VertexSet::EMPTY),
                reason: "d-separated in the graph but dependent in the backend".into()
            }
        );
        assert!(check_markov(&four_cycle(), &cancelled()).unwrap().holds);
    }

    #[test]
    fn cancellation_breaks_adjacency_only() {
        let g = four_cycle();
        let ci = cancelled();
        let adj = check_adjacency_faithfulness(&g, &ci).unwrap();
        assert!(!adj.holds);
        assert_eq!(adj.total_witnesses, 1);
        assert!(matches!(
            &adj.witnesses[0],
            Witness::Triple { triple, .. } if *triple == CiTriple::new(0, 1, VertexSet::singleton(3))
        ));
        assert!(check_orientation_faithfulness(&g, &ci).unwrap().holds);
        assert!(!check_restricted_faithfulness(&g, &ci).unwrap().holds);
        assert!(check_smr(&g, &ci).unwrap().holds);
        assert!(check_triangle_faithfulness(&g, &ci).unwrap().holds);
    }

    #[test]
    fn marginal_independence_breaks_smr() {
        let g = four_cycle();
        let mut ci = ExplicitBackend::from_dag(&g);
        ci.add(0, 3, VertexSet::EMPTY).unwrap();
        let r = check_smr(&g, &ci).unwrap();
        assert!(!r.holds);
        let tilde = Dag::new(4, [(0, 1), (0, 2), (2, 1), (3, 2)]).unwrap();
        assert!(r.witnesses.iter().any(|w| matches!(
            w,
            Witness::Dag { dag, .. } if pattern_of(dag) == pattern_of(&tilde)
        )));
    }

    #[test]
    fn faithful_backend_passes_everything() {
        let g = four_cycle();
        let ci = DsepBackend::new(g.clone());
        for a in Assumption::ALL {
            if a == Assumption::LambdaSmr {
                continue;
            }
            assert!(check(a, &g, &ci).unwrap().holds, "{a}");
        }
    }

    #[test]
    fn triangle_violation() {
        let g = Dag::new(3, [(0, 1), (0, 2), (1, 2)]).unwrap();
        let mut ci = ExplicitBackend::from_dag(&g);
        ci.add(0, 2, VertexSet::singleton(1)).unwrap();
        assert!(!check_triangle_faithfulness(&g, &ci).unwrap().holds);
    }

    #[test]
    fn sgs_minimality_cases() {
        let g = four_cycle();
        let extra = g.with_edge(0, 2).unwrap();
        let r = check_sgs_minimality(&extra, &DsepBackend::new(g.clone())).unwrap();
        assert!(!r.holds);
        assert!(matches!(&r.witnesses[0], Witness::Dag { dag, .. } if *dag == g));
        let none = ExplicitBackend::from_dag(&Dag::empty(3));
        assert!(check_sgs_minimality(&Dag::empty(3), &none).unwrap().holds);
    }

    #[test]
    fn witness_truncation() {
        // every pair dependent, empty graph claims all separations
        let ci = ExplicitBackend::new(6, []).unwrap();
        let r = check_markov(&Dag::empty(6), &ci).unwrap();
        assert_eq!(r.witnesses.len(), WITNESS_LIMIT);
        assert_eq!(r.total_witnesses, 15 * 16);
        assert!(!r.holds);
    }

    #[test]
    fn guards() {
        let ci = DsepBackend::new(Dag::empty(6));
        assert!(matches!(
            check_smr(&Dag::empty(6), &ci),
            Err(AssumptionError::Capacity { p: 6, limit: 5, .. })
        ));
        assert!(matches!(
            check_markov(&Dag::empty(5), &ci),
            Err(AssumptionError::DimensionMismatch { .. })
        ));
        assert_eq!("sgs-min".parse::<Assumption>(), Ok(Assumption::SgsMinimality));
        assert!("nope".parse::<Assumption>().is_err());
    }
}
