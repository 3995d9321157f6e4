use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Dag, GraphError, Pair};

/// Collider triple `left -> collider <- right` with `left < right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VStructure {
    pub left: usize,
    pub collider: usize,
    pub right: usize,
}

impl VStructure {
    pub fn new(a: usize, collider: usize, b: usize) -> Self {
        VStructure {
            left: a.min(b),
            collider,
            right: a.max(b),
        }
    }
}

/// Path `left - middle - right` whose endpoints are not adjacent, `left < right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UnshieldedTriple {
    pub left: usize,
    pub middle: usize,
    pub right: usize,
}

/// Three mutually adjacent vertices, sorted.
pub type Triangle = [usize; 3];

/// Skeleton plus v-structures: the canonical identifier of a Markov
/// equivalence class.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EquivClassPattern {
    pub skeleton: BTreeSet<Pair>,
    pub v_structures: BTreeSet<VStructure>,
}

impl EquivClassPattern {
    /// Checks that every v-structure sits on an unshielded triple of the skeleton.
    pub fn is_well_formed(&self) -> bool {
        self.v_structures.iter().all(|v| {
            self.skeleton.contains(&Pair::new(v.left, v.collider))
                && self.skeleton.contains(&Pair::new(v.right, v.collider))
                && !self.skeleton.contains(&Pair::new(v.left, v.right))
        })
    }
}

pub fn skeleton(g: &Dag) -> BTreeSet<Pair> {
    g.edges().into_iter().map(|(j, k)| Pair::new(j, k)).collect()
}

pub fn v_structures(g: &Dag) -> BTreeSet<VStructure> {
    let mut out = BTreeSet::new();
    for collider in 0..g.p() {
        let pa: Vec<usize> = g.parents(collider).iter().collect();
        for (i, &a) in pa.iter().enumerate() {
            for &b in &pa[i + 1..] {
                if !g.adjacent(a, b) {
                    out.insert(VStructure::new(a, collider, b));
                }
            }
        }
    }
    out
}

pub fn pattern_of(g: &Dag) -> EquivClassPattern {
    EquivClassPattern {
        skeleton: skeleton(g),
        v_structures: v_structures(g),
    }
}

pub fn markov_equivalent(g1: &Dag, g2: &Dag) -> Result<bool, GraphError> {
    if g1.p() != g2.p() {
        return Err(GraphError::DimensionMismatch(g1.p(), g2.p()));
    }
    Ok(skeleton(g1) == skeleton(g2) && v_structures(g1) == v_structures(g2))
}

pub fn triangles(g: &Dag) -> BTreeSet<Triangle> {
    let p = g.p();
    let mut out = BTreeSet::new();
    for a in 0..p {
        for b in a + 1..p {
            if !g.adjacent(a, b) {
                continue;
            }
            for c in b + 1..p {
                if g.adjacent(a, c) && g.adjacent(b, c) {
                    out.insert([a, b, c]);
                }
            }
        }
    }
    out
}

pub fn unshielded_triples(g: &Dag) -> BTreeSet<UnshieldedTriple> {
    let mut out = BTreeSet::new();
    for middle in 0..g.p() {
        let nb: Vec<usize> = g.neighbors(middle).iter().collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                if !g.adjacent(a, b) {
                    out.insert(UnshieldedTriple {
                        left: a,
                        middle,
                        right: b,
                    });
                }
            }
        }
    }
    out
}
