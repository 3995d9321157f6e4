//! Brute-force reference implementations and shared fixtures for the
//! integration tests. Everything here follows textbook definitions literally
//! and avoids the library's own algorithms.

#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sp_core::graph::{CiTriple, Dag, Pair, VertexSet};
use sp_core::oracle::{CiBackend, ExplicitBackend};

pub fn set(vs: &[usize]) -> VertexSet {
    vs.iter().copied().collect()
}

pub fn pairs(list: &[(usize, usize)]) -> BTreeSet<Pair> {
    list.iter().map(|&(a, b)| Pair::new(a, b)).collect()
}

/// DAG from 1-based edge labels.
pub fn dag1(p: usize, edges: &[(usize, usize)]) -> Dag {
    Dag::new(p, edges.iter().map(|&(a, b)| (a - 1, b - 1))).unwrap()
}

/// `1→2, 1→4, 2→3, 3→4`.
pub fn four_cycle() -> Dag {
    dag1(4, &[(1, 2), (1, 4), (2, 3), (3, 4)])
}

pub fn chain4() -> Dag {
    dag1(4, &[(1, 2), (2, 3), (3, 4)])
}

/// d-separations of `g` plus `add`, minus `remove`; triples use 1-based labels.
pub fn edited(g: &Dag, add: &[(usize, usize, &[usize])], remove: &[(usize, usize, &[usize])]) -> ExplicitBackend {
    let mut ci = ExplicitBackend::from_dag(g);
    let shift = |s: &[usize]| s.iter().map(|v| v - 1).collect::<VertexSet>();
    for &(j, k, s) in remove {
        ci.remove(j - 1, k - 1, shift(s)).unwrap();
    }
    for &(j, k, s) in add {
        ci.add(j - 1, k - 1, shift(s)).unwrap();
    }
    ci
}

/// Four-cycle plus `X1 ⫫ X2 | X4`.
pub fn unfaithful_cycle_backend() -> ExplicitBackend {
    edited(&four_cycle(), &[(1, 2, &[4])], &[])
}

/// Four-cycle plus `X1 ⫫ X4`.
pub fn detectable_backend() -> ExplicitBackend {
    edited(&four_cycle(), &[(1, 4, &[])], &[])
}

/// Chain `1→2→3→4` missing `X1 ⫫ X4 | X2, X3`.
pub fn type_one_error_backend() -> ExplicitBackend {
    edited(&chain4(), &[], &[(1, 4, &[2, 3])])
}

/// `1→4, 1→3, 4→2, 4→3, 2→3`.
pub fn p_minimal_outsider_dag() -> Dag {
    dag1(4, &[(1, 4), (1, 3), (4, 2), (4, 3), (2, 3)])
}

/// `1→2, 1→3, 3→2, 4→3`.
pub fn detectable_alternative_dag() -> Dag {
    dag1(4, &[(1, 2), (1, 3), (3, 2), (4, 3)])
}

pub fn descendants(g: &Dag, v: usize) -> VertexSet {
    let mut seen = VertexSet::singleton(v);
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        for w in 0..g.p() {
            if g.has_edge(u, w) && !seen.contains(w) {
                seen.insert(w);
                stack.push(w);
            }
        }
    }
    seen
}

/// d-separation by enumerating every simple path of the skeleton.
pub fn dsep_by_paths(g: &Dag, j: usize, k: usize, s: VertexSet) -> bool {
    fn walk(g: &Dag, path: &mut Vec<usize>, k: usize, s: VertexSet) -> bool {
        let last = *path.last().unwrap();
        if last == k {
            return path_open(g, path, s);
        }
        for next in 0..g.p() {
            if g.adjacent(last, next) && !path.contains(&next) {
                path.push(next);
                let open = walk(g, path, k, s);
                path.pop();
                if open {
                    return true;
                }
            }
        }
        false
    }
    !walk(g, &mut vec![j], k, s)
}

fn path_open(g: &Dag, path: &[usize], s: VertexSet) -> bool {
    path.windows(3).all(|w| {
        let (a, m, b) = (w[0], w[1], w[2]);
        if g.has_edge(a, m) && g.has_edge(b, m) {
            !descendants(g, m).intersection(s).is_empty()
        } else {
            !s.contains(m)
        }
    })
}

pub fn every_triple(p: usize) -> Vec<CiTriple> {
    let mut out = Vec::new();
    for j in 0..p {
        for k in j + 1..p {
            let rest = VertexSet::full(p).without(j).without(k);
            for s in rest.subsets() {
                out.push(CiTriple::new(j, k, s));
            }
        }
    }
    out
}

/// Markov condition by path enumeration.
pub fn markov_by_paths(g: &Dag, ci: &dyn CiBackend) -> bool {
    every_triple(g.p())
        .into_iter()
        .all(|t| !dsep_by_paths(g, t.j, t.k, t.s) || ci.is_independent(t.j, t.k, t.s))
}

pub fn permutations(p: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, p: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == p {
            out.push(prefix.clone());
            return;
        }
        for v in 0..p {
            if !prefix.contains(&v) {
                prefix.push(v);
                rec(prefix, p, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), p, &mut out);
    out
}

pub fn linear_extensions(g: &Dag) -> Vec<Vec<usize>> {
    permutations(g.p())
        .into_iter()
        .filter(|order| {
            g.edges()
                .iter()
                .all(|&(a, b)| order.iter().position(|&v| v == a) < order.iter().position(|&v| v == b))
        })
        .collect()
}

fn acyclic(p: usize, edges: &[(usize, usize)]) -> bool {
    let mut remaining: Vec<usize> = (0..p).collect();
    let mut live: Vec<(usize, usize)> = edges.to_vec();
    while !remaining.is_empty() {
        let Some(pos) = remaining.iter().position(|&v| live.iter().all(|&(_, b)| b != v)) else {
            return false;
        };
        let v = remaining.remove(pos);
        live.retain(|&(a, _)| a != v);
    }
    true
}

/// Every labeled DAG on `p` vertices, from all subsets of ordered pairs.
pub fn all_dags_by_subsets(p: usize) -> Vec<Dag> {
    let ordered: Vec<(usize, usize)> = (0..p)
        .flat_map(|a| (0..p).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let mut out = Vec::new();
    for mask in 0u64..(1 << ordered.len()) {
        let edges: Vec<(usize, usize)> = ordered
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect();
        if acyclic(p, &edges) {
            out.push(Dag::new(p, edges).unwrap());
        }
    }
    out
}

/// All sub-DAGs of `g` obtained by deleting at least one edge.
pub fn proper_subdags(g: &Dag) -> Vec<Dag> {
    let edges = g.edges();
    let full = (1u64 << edges.len()) - 1;
    (0..full)
        .map(|mask| {
            let kept = edges
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e);
            Dag::new(g.p(), kept).unwrap()
        })
        .collect()
}

/// Literal scan over all orderings: the sparsest `G_π` by definition.
pub fn brute_sp(ci: &dyn CiBackend) -> (usize, BTreeSet<Vec<(usize, usize)>>) {
    let p = ci.p();
    let mut best = usize::MAX;
    let mut winners = BTreeSet::new();
    for order in permutations(p) {
        let mut edges = Vec::new();
        for b in 0..p {
            for a in 0..b {
                let s: VertexSet = order[..b].iter().copied().filter(|&v| v != order[a]).collect();
                if !ci.is_independent(order[a], order[b], s) {
                    edges.push((order[a], order[b]));
                }
            }
        }
        edges.sort();
        match edges.len().cmp(&best) {
            std::cmp::Ordering::Less => {
                best = edges.len();
                winners = BTreeSet::from([edges]);
            }
            std::cmp::Ordering::Equal => {
                winners.insert(edges);
            }
            std::cmp::Ordering::Greater => {}
        }
    }
    (best, winners)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random DAG: each pair of a shuffled order is an edge with probability `q`.
pub fn random_dag(p: usize, q: f64, rng: &mut impl Rng) -> Dag {
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for b in 0..p {
        for a in 0..b {
            if rng.random_bool(q) {
                edges.push((order[a], order[b]));
            }
        }
    }
    Dag::new(p, edges).unwrap()
}

/// d-separations of `g` with a few triples toggled at random.
pub fn perturbed(g: &Dag, flips: usize, rng: &mut impl Rng) -> ExplicitBackend {
    let mut ci = ExplicitBackend::from_dag(g);
    let all = every_triple(g.p());
    if all.is_empty() {
        return ci;
    }
    for _ in 0..flips {
        let t = all[rng.random_range(0..all.len())];
        if ci.is_independent(t.j, t.k, t.s) {
            ci.remove(t.j, t.k, t.s).unwrap();
        } else {
            ci.add(t.j, t.k, t.s).unwrap();
        }
    }
    ci
}

/// Proptest strategy: a DAG on `lo..=hi` vertices with edges along a random
/// vertex order.
pub fn arb_dag(lo: usize, hi: usize) -> impl Strategy<Value = Dag> {
    (lo..=hi).prop_flat_map(|p| {
        let pairs = p * (p - 1) / 2;
        (
            Just(p),
            proptest::collection::vec(any::<bool>(), pairs),
            Just((0..p).collect::<Vec<usize>>()).prop_shuffle(),
        )
            .prop_map(|(p, bits, order)| {
                let mut edges = Vec::new();
                let mut i = 0;
                for b in 0..p {
                    for a in 0..b {
                        if bits[i] {
                            edges.push((order[a], order[b]));
                        }
                        i += 1;
                    }
                }
                Dag::new(p, edges).unwrap()
            })
    })
}

/// Proptest strategy: a DAG with the d-separation set perturbed by up to
/// `max_flips` toggled triples.
pub fn arb_backend(lo: usize, hi: usize, max_flips: usize) -> impl Strategy<Value = (Dag, ExplicitBackend)> {
    (arb_dag(lo, hi), any::<u64>(), 0..=max_flips).prop_map(|(g, seed, flips)| {
        let ci = perturbed(&g, flips, &mut rng(seed));
        (g, ci)
    })
}
