use super::{Dag, GraphError, VertexSet};

/// Largest `p` accepted by [`enumerate_all_dags`].
pub const MAX_ENUMERATION_P: usize = 6;

/// Every labeled DAG on `p` vertices, each exactly once.
///
/// Walks all `3^(p(p-1)/2)` assignments of {absent, forward, backward} to the
/// vertex pairs and drops the cyclic ones.
pub fn enumerate_all_dags(p: usize) -> Result<impl Iterator<Item = Dag>, GraphError> {
    if p > MAX_ENUMERATION_P {
        return Err(GraphError::Capacity {
            p,
            limit: MAX_ENUMERATION_P,
        });
    }
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|a| (a + 1..p).map(move |b| (a, b))).collect();
    let total = 3u64.pow(pairs.len() as u32);
    Ok((0..total).filter_map(move |mut code| {
        let mut parents = vec![VertexSet::EMPTY; p];
        for &(a, b) in &pairs {
            match code % 3 {
                1 => parents[b].insert(a),
                2 => parents[a].insert(b),
                _ => {}
            }
            code /= 3;
        }
        if is_acyclic(&parents) {
            Some(Dag::from_parents_unchecked(parents))
        } else {
            None
        }
    }))
}

fn is_acyclic(parents: &[VertexSet]) -> bool {
    // repeatedly peel off vertices whose parents are all peeled
    let p = parents.len();
    let mut done = VertexSet::EMPTY;
    loop {
        let before = done;
        for (v, pa) in parents.iter().enumerate() {
            if !done.contains(v) && pa.is_subset(done) {
                done.insert(v);
            }
        }
        if done.len() == p {
            return true;
        }
        if done == before {
            return false;
        }
    }
}
