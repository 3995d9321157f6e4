use super::{Dag, GraphError, VertexSet};

/// Whether `j` and `k` are d-separated given `s` in `g`.
///
/// Runs a ball-passing reachability search from `j`: a trail may pass a
/// non-collider only outside `s`, and a collider only inside `an(s)`.
pub fn d_separated(g: &Dag, j: usize, k: usize, s: VertexSet) -> Result<bool, GraphError> {
    let p = g.p();
    for v in [j, k] {
        if v >= p {
            return Err(GraphError::VertexOutOfRange { vertex: v, p });
        }
    }
    if j == k {
        return Err(GraphError::InvalidQuery(format!(
            "endpoints must differ (got {j} twice)"
        )));
    }
    if !s.is_subset(g.vertices()) {
        return Err(GraphError::VertexOutOfRange {
            vertex: s.bound() - 1,
            p,
        });
    }
    if s.contains(j) || s.contains(k) {
        return Err(GraphError::InvalidQuery(format!(
            "conditioning set {s:?} contains an endpoint of ({j},{k})"
        )));
    }
    Ok(d_separated_unchecked(g, j, k, s))
}

/// [`d_separated`] without argument validation.
pub fn d_separated_unchecked(g: &Dag, j: usize, k: usize, s: VertexSet) -> bool {
    !reachable(g, j, s).contains(k)
}

/// Vertices d-connected to `source` given `s`.
pub(crate) fn reachable(g: &Dag, source: usize, s: VertexSet) -> VertexSet {
    let p = g.p();
    let ancestors = g.ancestral_closure(s);
    let children: Vec<VertexSet> = {
        let mut c = vec![VertexSet::EMPTY; p];
        for v in 0..p {
            for u in g.parents(v) {
                c[u].insert(v);
            }
        }
        c
    };

    // visited[dir] with dir 0 = arrived from a child (moving up), 1 = from a parent (moving down)
    let mut visited = [VertexSet::EMPTY; 2];
    let mut out = VertexSet::EMPTY;
    let mut stack = vec![(source, 0usize)];
    while let Some((v, dir)) = stack.pop() {
        if visited[dir].contains(v) {
            continue;
        }
        visited[dir].insert(v);
        if !s.contains(v) {
            out.insert(v);
        }
        let observed = s.contains(v);
        if dir == 0 && !observed {
            for u in g.parents(v) {
                stack.push((u, 0));
            }
            for c in children[v] {
                stack.push((c, 1));
            }
        } else if dir == 1 {
            if !observed {
                for c in children[v] {
                    stack.push((c, 1));
                }
            }
            if ancestors.contains(v) {
                for u in g.parents(v) {
                    stack.push((u, 0));
                }
            }
        }
    }
    out.without(source)
}
