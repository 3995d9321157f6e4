//! DAGs on labeled vertices `0..p`, d-separation, and Markov-equivalence
//! comparison via skeletons and v-structures.

mod dsep;
mod enumerate;
pub mod json;
mod order;
mod pattern;
mod text;
mod triples;
mod vertex_set;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dsep::{d_separated, d_separated_unchecked};
pub use enumerate::{enumerate_all_dags, MAX_ENUMERATION_P};
pub use order::{consistent_order, topological_orders, TopologicalOrders};
pub use pattern::{
    markov_equivalent, pattern_of, skeleton, triangles, unshielded_triples, v_structures, EquivClassPattern, Triangle,
    UnshieldedTriple, VStructure,
};
pub use text::{format_dag, parse_dag, DagFile, LabelBase};
pub use triples::{all_triples, dsep_set, CiTriple, TripleSet};
pub use vertex_set::{VertexSet, MAX_VERTICES};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {vertex} out of range for a graph on {p} vertices")]
    VertexOutOfRange { vertex: usize, p: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),
    #[error("edge set contains a directed cycle through vertex {0}")]
    Cycle(usize),
    #[error("invalid d-separation query: {0}")]
    InvalidQuery(String),
    #[error("graphs have different vertex counts ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("vertex count {p} exceeds the limit of {limit}")]
    Capacity { p: usize, limit: usize },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Unordered vertex pair, stored with the smaller label first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair(usize, usize);

impl Pair {
    pub fn new(a: usize, b: usize) -> Self {
        debug_assert_ne!(a, b);
        if a < b {
            Pair(a, b)
        } else {
            Pair(b, a)
        }
    }

    pub fn lo(self) -> usize {
        self.0
    }

    pub fn hi(self) -> usize {
        self.1
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.0, self.1)
    }
}

/// Directed acyclic graph on vertices `0..p`.
///
/// Acyclicity, range and simplicity are checked at construction, so every
/// `Dag` value is a valid DAG.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dag {
    parents: Vec<VertexSet>,
}

impl Dag {
    pub fn empty(p: usize) -> Self {
        assert!(p <= MAX_VERTICES);
        Dag {
            parents: vec![VertexSet::EMPTY; p],
        }
    }

    /// Builds a DAG from `j -> k` edges, rejecting loops, duplicates and cycles.
    pub fn new(p: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        if p > MAX_VERTICES {
            return Err(GraphError::Capacity { p, limit: MAX_VERTICES });
        }
        let mut parents = vec![VertexSet::EMPTY; p];
        for (j, k) in edges {
            for v in [j, k] {
                if v >= p {
                    return Err(GraphError::VertexOutOfRange { vertex: v, p });
                }
            }
            if j == k {
                return Err(GraphError::SelfLoop(j));
            }
            if parents[k].contains(j) {
                return Err(GraphError::DuplicateEdge(j, k));
            }
            parents[k].insert(j);
        }
        let dag = Dag { parents };
        if let Some(v) = dag.find_cycle_vertex() {
            return Err(GraphError::Cycle(v));
        }
        Ok(dag)
    }

    /// Builds a DAG directly from parent sets; the caller guarantees acyclicity.
    pub(crate) fn from_parents_unchecked(parents: Vec<VertexSet>) -> Self {
        let dag = Dag { parents };
        debug_assert!(dag.find_cycle_vertex().is_none());
        dag
    }

    /// Builds a DAG from parent sets, checking range and acyclicity.
    pub fn from_parents(parents: Vec<VertexSet>) -> Result<Self, GraphError> {
        let p = parents.len();
        let edges: Vec<(usize, usize)> = parents
            .iter()
            .enumerate()
            .flat_map(|(k, pa)| pa.iter().map(move |j| (j, k)))
            .collect();
        Dag::new(p, edges)
    }

    /// Kahn's algorithm; returns some vertex on a cycle if one exists.
    fn find_cycle_vertex(&self) -> Option<usize> {
        let p = self.p();
        let mut indeg: Vec<usize> = self.parents.iter().map(|s| s.len()).collect();
        let children = self.children_sets();
        let mut stack: Vec<usize> = (0..p).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for c in children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    stack.push(c);
                }
            }
        }
        if seen == p {
            None
        } else {
            (0..p).find(|&v| indeg[v] > 0)
        }
    }

    fn children_sets(&self) -> Vec<VertexSet> {
        let mut children = vec![VertexSet::EMPTY; self.p()];
        for (k, pa) in self.parents.iter().enumerate() {
            for j in *pa {
                children[j].insert(k);
            }
        }
        children
    }

    pub fn p(&self) -> usize {
        self.parents.len()
    }

    pub fn vertices(&self) -> VertexSet {
        VertexSet::full(self.p())
    }

    /// Number of edges `|G|`.
    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(|s| s.len()).sum()
    }

    /// Edges `(j, k)` meaning `j -> k`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(k, pa)| pa.iter().map(move |j| (j, k)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn has_edge(&self, j: usize, k: usize) -> bool {
        k < self.p() && self.parents[k].contains(j)
    }

    pub fn adjacent(&self, j: usize, k: usize) -> bool {
        self.has_edge(j, k) || self.has_edge(k, j)
    }

    pub fn parents(&self, v: usize) -> VertexSet {
        self.parents[v]
    }

    pub fn parent_sets(&self) -> &[VertexSet] {
        &self.parents
    }

    pub fn children(&self, v: usize) -> VertexSet {
        (0..self.p()).filter(|&k| self.parents[k].contains(v)).collect()
    }

    pub fn neighbors(&self, v: usize) -> VertexSet {
        self.parents[v].union(self.children(v))
    }

    /// `an(S)`: members of `s` together with all their ancestors.
    pub fn ancestral_closure(&self, s: VertexSet) -> VertexSet {
        let mut closure = s;
        let mut frontier: Vec<usize> = s.iter().collect();
        while let Some(v) = frontier.pop() {
            for u in self.parents[v] {
                if !closure.contains(u) {
                    closure.insert(u);
                    frontier.push(u);
                }
            }
        }
        closure
    }

    /// `de(v)`: strict descendants of `v`.
    pub fn descendants(&self, v: usize) -> VertexSet {
        let children = self.children_sets();
        let mut out = VertexSet::EMPTY;
        let mut frontier = vec![v];
        while let Some(u) = frontier.pop() {
            for c in children[u] {
                if !out.contains(c) {
                    out.insert(c);
                    frontier.push(c);
                }
            }
        }
        out
    }

    /// `nd(v) = V \ ({v} ∪ de(v))`.
    pub fn non_descendants(&self, v: usize) -> VertexSet {
        self.vertices().difference(self.descendants(v)).without(v)
    }

    pub fn without_edge(&self, j: usize, k: usize) -> Dag {
        let mut parents = self.parents.clone();
        parents[k].remove(j);
        Dag { parents }
    }

    /// Adds `j -> k`, failing if that would create a cycle.
    pub fn with_edge(&self, j: usize, k: usize) -> Result<Dag, GraphError> {
        let mut edges = self.edges();
        edges.push((j, k));
        Dag::new(self.p(), edges)
    }

    /// True when every edge of `self` is also an edge of `other`.
    pub fn is_subgraph_of(&self, other: &Dag) -> bool {
        self.p() == other.p() && self.parents.iter().zip(&other.parents).all(|(a, b)| a.is_subset(*b))
    }

    /// Relabels vertex `v` to `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> Dag {
        let edges = self.edges().into_iter().map(|(j, k)| (perm[j], perm[k]));
        Dag::new(self.p(), edges).expect("relabeling preserves acyclicity")
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dag(p={}, [", self.p())?;
        for (i, (j, k)) in self.edges().into_iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{j}->{k}")?;
        }
        write!(f, "])")
    }
}

/// An ordering `(π(1), ..., π(p))` of the vertices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    order: Vec<usize>,
}

impl Permutation {
    pub fn new(order: Vec<usize>) -> Result<Self, GraphError> {
        let p = order.len();
        let mut seen = vec![false; p];
        for &v in &order {
            if v >= p {
                return Err(GraphError::InvalidPermutation(format!("label {v} out of range 0..{p}")));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(GraphError::InvalidPermutation(format!("label {v} repeated")));
            }
        }
        Ok(Permutation { order })
    }

    pub fn identity(p: usize) -> Self {
        Permutation {
            order: (0..p).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }

    /// Vertex at 0-based position `i`.
    pub fn at(&self, i: usize) -> usize {
        self.order[i]
    }

    /// `π⁻¹`: `inverse()[v]` is the position of vertex `v`.
    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.order.len()];
        for (i, &v) in self.order.iter().enumerate() {
            inv[v] = i;
        }
        Permutation { order: inv }
    }

    /// True when every edge of `g` points forward in this order.
    pub fn is_consistent_with(&self, g: &Dag) -> bool {
        let pos = self.inverse();
        g.edges().into_iter().all(|(j, k)| pos.order[j] < pos.order[k])
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = GraphError;

    fn try_from(v: Vec<usize>) -> Result<Self, GraphError> {
        Permutation::new(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.order
    }
}

/// Orients every skeleton edge forward along `order`.
pub fn orient_by_order(p: usize, skeleton: &BTreeSet<Pair>, order: &Permutation) -> Dag {
    let pos = order.inverse();
    let edges = skeleton.iter().map(|e| {
        if pos.at(e.lo()) < pos.at(e.hi()) {
            (e.lo(), e.hi())
        } else {
            (e.hi(), e.lo())
        }
    });
    Dag::new(p, edges).expect("edges oriented along a total order are acyclic")
}
