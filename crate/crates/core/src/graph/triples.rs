use std::fmt;

use serde::{Deserialize, Serialize};

use super::dsep::reachable;
use super::{Dag, VertexSet};

/// A conditional-independence statement `X_j ⫫ X_k | X_S`, stored with `j < k`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CiTriple {
    pub j: usize,
    pub k: usize,
    pub s: VertexSet,
}

impl CiTriple {
    /// Canonicalizes the endpoint order. Panics if `j == k` or `s` holds an endpoint.
    pub fn new(j: usize, k: usize, s: VertexSet) -> Self {
        assert_ne!(j, k, "CI triple endpoints must differ");
        assert!(
            !s.contains(j) && !s.contains(k),
            "conditioning set {s:?} contains an endpoint of ({j},{k})"
        );
        CiTriple {
            j: j.min(k),
            k: j.max(k),
            s,
        }
    }

    pub fn try_new(j: usize, k: usize, s: VertexSet) -> Option<Self> {
        (j != k && !s.contains(j) && !s.contains(k)).then(|| CiTriple::new(j, k, s))
    }
}

impl fmt::Debug for CiTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} ⫫ {} | {:?})", self.j, self.k, self.s)
    }
}

/// Dense bitset over all CI triples on `p` vertices.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TripleSet {
    p: usize,
    words: Vec<u64>,
}

impl TripleSet {
    /// Largest `p` a `TripleSet` will index (`C(p,2) · 2^p` bits).
    pub const MAX_P: usize = 16;

    pub fn new(p: usize) -> Self {
        assert!(p <= Self::MAX_P, "triple sets are limited to p <= {}", Self::MAX_P);
        let bits = p * p.saturating_sub(1) / 2 * (1usize << p);
        TripleSet {
            p,
            words: vec![0; bits.div_ceil(64)],
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    fn index(&self, t: &CiTriple) -> usize {
        let p = self.p;
        // row-major index of (j,k) among pairs j<k
        let pair = t.j * (2 * p - t.j - 1) / 2 + (t.k - t.j - 1);
        (pair << p) | t.s.bits() as usize
    }

    pub fn insert(&mut self, t: CiTriple) {
        let i = self.index(&t);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, t: &CiTriple) -> bool {
        let i = self.index(t);
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &TripleSet) -> bool {
        self.p == other.p && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Members in increasing (j, k, S-bitmask) order.
    pub fn iter(&self) -> impl Iterator<Item = CiTriple> + '_ {
        all_triples(self.p).filter(|t| self.contains(t))
    }
}

impl fmt::Debug for TripleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<CiTriple> for TripleSet {
    /// Panics on an empty iterator; use [`TripleSet::new`] plus `insert` instead.
    fn from_iter<I: IntoIterator<Item = CiTriple>>(iter: I) -> Self {
        let items: Vec<CiTriple> = iter.into_iter().collect();
        let p = items
            .iter()
            .map(|t| t.k.max(t.s.bound().saturating_sub(1)) + 1)
            .max()
            .expect("cannot infer p from an empty triple list");
        let mut set = TripleSet::new(p);
        for t in items {
            set.insert(t);
        }
        set
    }
}

/// Every triple `(j, k, S)` with `j < k` and `S ⊆ V \ {j, k}`.
pub fn all_triples(p: usize) -> impl Iterator<Item = CiTriple> {
    (0..p).flat_map(move |j| {
        (j + 1..p).flat_map(move |k| {
            VertexSet::full(p)
                .without(j)
                .without(k)
                .subsets()
                .map(move |s| CiTriple { j, k, s })
        })
    })
}

/// `D_sep(G)`: all d-separation statements of `g`.
pub fn dsep_set(g: &Dag) -> TripleSet {
    let p = g.p();
    let mut out = TripleSet::new(p);
    for j in 0..p {
        for s in VertexSet::full(p).without(j).subsets() {
            let connected = reachable(g, j, s);
            for k in j + 1..p {
                if !s.contains(k) && !connected.contains(k) {
                    out.insert(CiTriple { j, k, s });
                }
            }
        }
    }
    out
}
