//! Constraint-based baselines: SGS and PC skeleton search followed by
//! v-structure orientation from the recorded separating sets.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};
use thiserror::Error;

use crate::graph::json::{pattern_json, skeleton_json};
use crate::graph::{EquivClassPattern, LabelBase, Pair, VStructure, VertexSet};
use crate::oracle::CiBackend;

/// SGS tests `2^(p-2)` sets per pair.
pub const DEFAULT_SGS_MAX_P: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("p = {p} exceeds the subset-search cap of {cap}")]
    Capacity { p: usize, cap: usize },
    #[error("no separating set recorded for non-adjacent pair {0}")]
    MissingSepset(Pair),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sgs,
    Pc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sgs => "sgs",
            Method::Pc => "pc",
        }
    }
}

/// Separating set found for each removed pair.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SepsetTable(BTreeMap<Pair, VertexSet>);

impl SepsetTable {
    pub fn new() -> Self {
        SepsetTable::default()
    }

    pub fn insert(&mut self, j: usize, k: usize, s: VertexSet) {
        self.0.insert(Pair::new(j, k), s);
    }

    pub fn get(&self, j: usize, k: usize) -> Option<VertexSet> {
        self.0.get(&Pair::new(j, k)).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Pair, VertexSet)> + '_ {
        self.0.iter().map(|(&e, &s)| (e, s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonResult {
    pub skeleton: BTreeSet<Pair>,
    pub sepsets: SepsetTable,
    /// CI queries issued.
    pub tests: usize,
}

/// Removes `{j,k}` when any `S ⊆ V∖{j,k}` separates them, recording the
/// first witness by size and then lexicographically.
pub fn sgs_skeleton(ci: &dyn CiBackend, max_p: usize) -> Result<SkeletonResult, BaselineError> {
    let p = ci.p();
    if p > max_p {
        return Err(BaselineError::Capacity { p, cap: max_p });
    }
    let mut out = SkeletonResult {
        skeleton: BTreeSet::new(),
        sepsets: SepsetTable::new(),
        tests: 0,
    };
    for j in 0..p {
        for k in j + 1..p {
            let rest = VertexSet::full(p).without(j).without(k);
            let mut found = None;
            'sizes: for size in 0..=rest.len() {
                for s in rest.subsets_of_size(size) {
                    out.tests += 1;
                    if ci.is_independent(j, k, s) {
                        found = Some(s);
                        break 'sizes;
                    }
                }
            }
            match found {
                Some(s) => out.sepsets.insert(j, k, s),
                None => {
                    out.skeleton.insert(Pair::new(j, k));
                }
            }
        }
    }
    Ok(out)
}

/// Level-wise search: at level `ℓ`, each ordered adjacent pair `(j, k)` is
/// tested against every size-`ℓ` subset of the current `adj(j)∖{k}`, pairs
/// visited lexicographically. Stops once no adjacency set exceeds `ℓ`.
pub fn pc_skeleton(ci: &dyn CiBackend, max_p: usize) -> Result<SkeletonResult, BaselineError> {
    let p = ci.p();
    if p > max_p {
        return Err(BaselineError::Capacity { p, cap: max_p });
    }
    let mut adj: Vec<VertexSet> = (0..p).map(|v| VertexSet::full(p).without(v)).collect();
    let mut sepsets = SepsetTable::new();
    let mut tests = 0;
    let mut level = 0;
    while (0..p).any(|v| adj[v].len() > level) {
        for j in 0..p {
            for k in 0..p {
                if !adj[j].contains(k) {
                    continue;
                }
                let candidates = adj[j].without(k);
                if candidates.len() < level {
                    continue;
                }
                for s in candidates.subsets_of_size(level) {
                    tests += 1;
                    if ci.is_independent(j, k, s) {
                        adj[j].remove(k);
                        adj[k].remove(j);
                        sepsets.insert(j, k, s);
                        break;
                    }
                }
            }
        }
        level += 1;
    }
    let skeleton = (0..p)
        .flat_map(|j| adj[j].iter().filter(move |&k| k > j).map(move |k| Pair::new(j, k)))
        .collect();
    Ok(SkeletonResult {
        skeleton,
        sepsets,
        tests,
    })
}

/// Marks `j → ℓ ← k` for every unshielded triple `j − ℓ − k` with
/// `ℓ ∉ sepset(j, k)`. Overlapping, conflicting orientations are kept as is.
pub fn orient_v_structures(
    skeleton: &BTreeSet<Pair>,
    sepsets: &SepsetTable,
) -> Result<EquivClassPattern, BaselineError> {
    let p = skeleton.iter().map(|e| e.hi() + 1).max().unwrap_or(0);
    let mut nb = vec![VertexSet::EMPTY; p];
    for e in skeleton {
        nb[e.lo()].insert(e.hi());
        nb[e.hi()].insert(e.lo());
    }
    let mut v_structures = BTreeSet::new();
    for (mid, around) in nb.iter().enumerate() {
        let around: Vec<usize> = around.iter().collect();
        for (i, &j) in around.iter().enumerate() {
            for &k in &around[i + 1..] {
                if nb[j].contains(k) {
                    continue;
                }
                let s = sepsets.get(j, k).ok_or(BaselineError::MissingSepset(Pair::new(j, k)))?;
                if !s.contains(mid) {
                    v_structures.insert(VStructure::new(j, mid, k));
                }
            }
        }
    }
    Ok(EquivClassPattern {
        skeleton: skeleton.clone(),
        v_structures,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineResult {
    pub method: Method,
    pub pattern: EquivClassPattern,
    pub sepsets: SepsetTable,
    pub tests: usize,
}

impl BaselineResult {
    pub fn to_json(&self, base: LabelBase) -> Value {
        let o = base.offset();
        let sepsets: Vec<Value> = self
            .sepsets
            .iter()
            .map(|(e, s)| {
                json!({
                    "pair": [e.lo() + o, e.hi() + o],
                    "sepset": s.iter().map(|v| v + o).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "method": self.method.name(),
            "edge_count": self.pattern.skeleton.len(),
            "skeleton": skeleton_json(&self.pattern.skeleton, base),
            "classes": [pattern_json(&self.pattern, base)],
            "unique_class": true,
            "sepsets": sepsets,
            "tests": self.tests,
        })
    }
}

/// Skeleton search followed by orientation.
pub fn run_baseline(method: Method, ci: &dyn CiBackend, max_p: usize) -> Result<BaselineResult, BaselineError> {
    let sk = match method {
        Method::Sgs => sgs_skeleton(ci, max_p)?,
        Method::Pc => pc_skeleton(ci, max_p)?,
    };
    let pattern = orient_v_structures(&sk.skeleton, &sk.sepsets)?;
    Ok(BaselineResult {
        method,
        pattern,
        sepsets: sk.sepsets,
        tests: sk.tests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{pattern_of, skeleton, Dag};
    use crate::oracle::{DsepBackend, ExplicitBackend};

    fn pairs(list: &[(usize, usize)]) -> BTreeSet<Pair> {
        list.iter().map(|&(a, b)| Pair::new(a, b)).collect()
    }

    #[test]
    fn chain_sepset_is_middle_vertex() {
        let ci = DsepBackend::new(Dag::new(3, [(0, 1), (1, 2)]).unwrap());
        for f in [sgs_skeleton, pc_skeleton] {
            let r = f(&ci, DEFAULT_SGS_MAX_P).unwrap();
            assert_eq!(r.skeleton, pairs(&[(0, 1), (1, 2)]));
            assert_eq!(r.sepsets.get(2, 0), Some(VertexSet::singleton(1)));
        }
    }

    #[test]
    fn unfaithful_independence_deletes_true_edge() {
        let g = Dag::new(4, [(0, 1), (0, 3), (1, 2), (2, 3)]).unwrap();
        let mut ci = ExplicitBackend::from_dag(&g);
        ci.add(0, 1, VertexSet::singleton(3)).unwrap();
        let r = sgs_skeleton(&ci, DEFAULT_SGS_MAX_P).unwrap();
        assert!(!r.skeleton.contains(&Pair::new(0, 1)));
        assert_ne!(r.skeleton, skeleton(&g));
    }

    #[test]
    fn sgs_survives_missing_independence() {
        let chain = Dag::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let mut ci = ExplicitBackend::from_dag(&chain);
        ci.remove(0, 3, [1, 2].iter().collect()).unwrap();
        let r = sgs_skeleton(&ci, DEFAULT_SGS_MAX_P).unwrap();
        assert_eq!(r.skeleton, skeleton(&chain));
    }

    #[test]
    fn orientation_rules() {
        let mut seps = SepsetTable::new();
        seps.insert(0, 1, VertexSet::EMPTY);
        let p = orient_v_structures(&pairs(&[(0, 2), (1, 2)]), &seps).unwrap();
        assert_eq!(p.v_structures, [VStructure::new(0, 2, 1)].into());
        let mut seps = SepsetTable::new();
        seps.insert(0, 2, VertexSet::singleton(1));
        let p = orient_v_structures(&pairs(&[(0, 1), (1, 2)]), &seps).unwrap();
        assert!(p.v_structures.is_empty());
        assert_eq!(
            orient_v_structures(&pairs(&[(0, 1), (1, 2)]), &SepsetTable::new()),
            Err(BaselineError::MissingSepset(Pair::new(0, 2)))
        );
    }

    #[test]
    fn faithful_four_cycle_pipeline() {
        let g = Dag::new(4, [(0, 1), (0, 3), (1, 2), (2, 3)]).unwrap();
        let ci = DsepBackend::new(g.clone());
        for m in [Method::Sgs, Method::Pc] {
            assert_eq!(run_baseline(m, &ci, DEFAULT_SGS_MAX_P).unwrap().pattern, pattern_of(&g));
        }
    }

    #[test]
    fn extremes() {
        let none = ExplicitBackend::from_dag(&Dag::empty(4));
        let r = pc_skeleton(&none, DEFAULT_SGS_MAX_P).unwrap();
        assert!(r.skeleton.is_empty());
        assert_eq!(r.tests, 6);
        let complete = Dag::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let r = pc_skeleton(&DsepBackend::new(complete), DEFAULT_SGS_MAX_P).unwrap();
        assert_eq!(r.skeleton.len(), 6);
        assert!(matches!(
            sgs_skeleton(&none, 3),
            Err(BaselineError::Capacity { p: 4, cap: 3 })
        ));
    }
}
