//! Browser bindings. Each export takes plain strings or numbers and returns a
//! JSON string; failures come back as `{"error": "..."}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use sp_core::baselines::{run_baseline, Method, DEFAULT_SGS_MAX_P};
use sp_core::graph::json::{edges_json, pattern_json, skeleton_json};
use sp_core::graph::{parse_dag, pattern_of, skeleton, Dag, LabelBase, Permutation};
use sp_core::oracle::io::parse_ci_file;
use sp_core::oracle::{CachedBackend, CiBackend, ExplicitBackend, FisherZBackend, TestConfig};
use sp_core::sem::{random_sem, rng_from_seed, sample, GenConfig};
use sp_core::sp::{build_dag_for_permutation, sp_search_with, SpConfig};

/// Largest graph the page accepts; keeps each call interactive.
pub const DEMO_MAX_P: usize = 8;

fn respond(r: Result<Value, String>) -> String {
    r.unwrap_or_else(|e| json!({ "error": e })).to_string()
}

fn backend(dag_text: &str, ci_text: &str) -> Result<(Dag, ExplicitBackend, LabelBase), String> {
    let file = parse_dag(dag_text).map_err(|e| e.to_string())?;
    if file.dag.p() > DEMO_MAX_P {
        return Err(format!("the demo is limited to p <= {DEMO_MAX_P}"));
    }
    let edits = parse_ci_file(ci_text, Some(file.dag.p()), Some(file.base)).map_err(|e| e.to_string())?;
    let mut ci = ExplicitBackend::from_dag(&file.dag);
    for t in &edits.removed {
        ci.remove(t.j, t.k, t.s).map_err(|e| e.to_string())?;
    }
    for t in &edits.added {
        ci.add(t.j, t.k, t.s).map_err(|e| e.to_string())?;
    }
    Ok((file.dag, ci, file.base))
}

fn compare(truth: &Dag, ci: &dyn CiBackend, base: LabelBase) -> Result<Value, String> {
    let cfg = SpConfig {
        threads: 1,
        ..SpConfig::default()
    };
    let sp = sp_search_with(ci, &cfg).map_err(|e| e.to_string())?;
    let mut out = json!({
        "p": truth.p(),
        "base": base.offset(),
        "truth": {
            "edges": edges_json(truth, base),
            "pattern": pattern_json(&pattern_of(truth), base),
        },
        "sp": sp.to_json(base),
    });
    let true_skeleton = skeleton(truth);
    out["sp"]["recovered"] = json!(sp.classes.iter().all(|c| c.skeleton == true_skeleton));
    for m in [Method::Sgs, Method::Pc] {
        let r = run_baseline(m, ci, DEFAULT_SGS_MAX_P).map_err(|e| e.to_string())?;
        let mut v = r.to_json(base);
        v["recovered"] = json!(r.pattern.skeleton == true_skeleton);
        out[m.name()] = v;
    }
    Ok(out)
}

/// Runs SP, SGS and PC on the d-separations of `dag_text` edited by
/// `ci_text` (CI statements; a leading `-` removes one).
#[wasm_bindgen]
pub fn learn_explicit(dag_text: &str, ci_text: &str) -> String {
    respond(backend(dag_text, ci_text).and_then(|(dag, ci, base)| compare(&dag, &ci, base)))
}

/// Builds the minimal I-map `G_π` for the ordering `order` (labels separated
/// by spaces or commas) over the same edited backend.
#[wasm_bindgen]
pub fn permutation_dag(dag_text: &str, ci_text: &str, order: &str) -> String {
    respond(backend(dag_text, ci_text).and_then(|(dag, ci, base)| {
        let labels: Vec<usize> = order
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|_| format!("invalid label `{t}`")))
            .collect::<Result<_, _>>()?;
        let internal: Vec<usize> = labels
            .iter()
            .map(|&l| l.checked_sub(base.offset()).ok_or(format!("label {l} out of range")))
            .collect::<Result<_, _>>()?;
        let pi = Permutation::new(internal)
            .ok()
            .filter(|pi| pi.len() == dag.p())
            .ok_or_else(|| format!("`{order}` is not an ordering of all {} variables", dag.p()))?;
        let g = build_dag_for_permutation(&pi, &ci);
        Ok(json!({
            "order": labels,
            "edges": edges_json(&g, base),
            "edge_count": g.edge_count(),
            "skeleton": skeleton_json(&skeleton(&g), base),
        }))
    }))
}

/// Draws a random SEM, samples `n` rows and compares the three learners
/// under Fisher-z tests at level `alpha`.
#[wasm_bindgen]
pub fn simulate_compare(p: usize, nbhd: f64, n: usize, alpha: f64, seed: u64) -> String {
    respond((|| {
        if p > DEMO_MAX_P {
            return Err(format!("the demo is limited to p <= {DEMO_MAX_P}"));
        }
        let gen = GenConfig::new(p, nbhd, seed, n).map_err(|e| e.to_string())?;
        let mut rng = rng_from_seed(seed);
        let sem = random_sem(&gen, &mut rng);
        let data = sample(&sem, n, &mut rng);
        let tc = TestConfig::with_alpha(alpha).map_err(|e| e.to_string())?;
        let ci = CachedBackend::new(FisherZBackend::new(&data, tc).map_err(|e| e.to_string())?);
        let mut out = compare(sem.dag(), &ci, LabelBase::One)?;
        out["n"] = json!(n);
        out["alpha"] = json!(alpha);
        out["seed"] = json!(seed);
        Ok(out)
    })())
}
