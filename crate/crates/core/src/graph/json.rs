//! JSON views of graphs with labels shifted to the caller's base.

use serde_json::{json, Value};

use super::{Dag, EquivClassPattern, LabelBase, Pair};

/// `[[j, k], ...]` in sorted edge order.
pub fn edges_json(dag: &Dag, base: LabelBase) -> Value {
    let o = base.offset();
    Value::Array(dag.edges().into_iter().map(|(j, k)| json!([j + o, k + o])).collect())
}

pub fn skeleton_json<'a>(pairs: impl IntoIterator<Item = &'a Pair>, base: LabelBase) -> Value {
    let o = base.offset();
    Value::Array(pairs.into_iter().map(|e| json!([e.lo() + o, e.hi() + o])).collect())
}

/// `{skeleton: [[a, b], ...], v_structures: [[left, collider, right], ...]}`.
pub fn pattern_json(pattern: &EquivClassPattern, base: LabelBase) -> Value {
    let o = base.offset();
    json!({
        "skeleton": skeleton_json(&pattern.skeleton, base),
        "v_structures": pattern
            .v_structures
            .iter()
            .map(|v| json!([v.left + o, v.collider + o, v.right + o]))
            .collect::<Vec<_>>(),
    })
}
