use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{Dag, Permutation, VertexSet};

/// Lexicographically smallest topological order of `g`.
pub fn consistent_order(g: &Dag) -> Permutation {
    let p = g.p();
    let mut remaining: Vec<usize> = (0..p).map(|v| g.parents(v).len()).collect();
    let children: Vec<VertexSet> = (0..p).map(|v| g.children(v)).collect();
    let mut ready: BinaryHeap<Reverse<usize>> = (0..p).filter(|&v| remaining[v] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(p);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for c in children[v] {
            remaining[c] -= 1;
            if remaining[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    Permutation::new(order).expect("acyclic graphs have a full topological order")
}

/// Every topological order of `g`, in lexicographic order.
pub fn topological_orders(g: &Dag) -> TopologicalOrders<'_> {
    TopologicalOrders {
        g,
        prefix: Vec::with_capacity(g.p()),
        placed: VertexSet::EMPTY,
        // candidate index to try next at each depth
        cursor: vec![0],
        done: false,
    }
}

/// Lazy depth-first enumeration of linear extensions.
pub struct TopologicalOrders<'a> {
    g: &'a Dag,
    prefix: Vec<usize>,
    placed: VertexSet,
    cursor: Vec<usize>,
    done: bool,
}

impl Iterator for TopologicalOrders<'_> {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let p = self.g.p();
        if self.done {
            return None;
        }
        if p == 0 {
            self.done = true;
            return Some(Permutation::identity(0));
        }
        loop {
            let depth = self.prefix.len();
            let start = self.cursor[depth];
            let next = (start..p).find(|&v| !self.placed.contains(v) && self.g.parents(v).is_subset(self.placed));
            match next {
                Some(v) => {
                    self.cursor[depth] = v + 1;
                    self.prefix.push(v);
                    self.placed.insert(v);
                    if self.prefix.len() == p {
                        let out = Permutation::new(self.prefix.clone()).ok();
                        let last = self.prefix.pop().unwrap();
                        self.placed.remove(last);
                        return out;
                    }
                    self.cursor.push(0);
                }
                None => {
                    self.cursor.pop();
                    match self.prefix.pop() {
                        Some(last) => self.placed.remove(last),
                        None => {
                            self.done = true;
                            return None;
                        }
                    }
                }
            }
        }
    }
}
