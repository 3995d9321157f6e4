mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use sp_core::baselines::{
    orient_v_structures, pc_skeleton, run_baseline, sgs_skeleton, BaselineError, Method, SepsetTable, DEFAULT_SGS_MAX_P,
};
use sp_core::graph::{pattern_of, skeleton, Dag, LabelBase, Pair, Permutation, VStructure};
use sp_core::oracle::{CiBackend, DsepBackend, ExplicitBackend};
use sp_core::sp::build_dag_for_permutation;

#[test]
fn fixture_skeletons() {
    // X1 ⫫ X4 removes {1,4}; the unfaithful relation hides a true edge.
    let sgs = sgs_skeleton(&detectable_backend(), DEFAULT_SGS_MAX_P).unwrap();
    assert_eq!(sgs.skeleton, pairs(&[(0, 1), (1, 2), (2, 3)]));
    assert_eq!(sgs.sepsets.get(0, 3), Some(set(&[])));

    let sgs = sgs_skeleton(&type_one_error_backend(), DEFAULT_SGS_MAX_P).unwrap();
    assert_eq!(sgs.skeleton, pairs(&[(0, 1), (1, 2), (2, 3)]));

    let sgs = sgs_skeleton(&unfaithful_cycle_backend(), DEFAULT_SGS_MAX_P).unwrap();
    assert_eq!(sgs.skeleton, pairs(&[(0, 3), (1, 2), (2, 3)]));
    assert_eq!(sgs.sepsets.get(0, 1), Some(set(&[3])));
}

#[test]
fn collider_and_chain_orientation() {
    let v = dag1(3, &[(1, 3), (2, 3)]);
    for m in [Method::Sgs, Method::Pc] {
        let r = run_baseline(m, &DsepBackend::new(v.clone()), DEFAULT_SGS_MAX_P).unwrap();
        assert_eq!(r.pattern, pattern_of(&v));
        assert_eq!(r.pattern.v_structures, [VStructure::new(0, 2, 1)].into());
        assert_eq!(r.method, m);
    }
    let chain = dag1(3, &[(1, 2), (2, 3)]);
    let r = run_baseline(Method::Pc, &DsepBackend::new(chain.clone()), DEFAULT_SGS_MAX_P).unwrap();
    assert!(r.pattern.v_structures.is_empty());
    assert_eq!(r.sepsets.get(0, 2), Some(set(&[1])));
}

#[test]
fn orientation_needs_a_sepset() {
    let sk = pairs(&[(0, 1), (1, 2)]);
    assert!(matches!(
        orient_v_structures(&sk, &SepsetTable::new()),
        Err(BaselineError::MissingSepset(e)) if e == Pair::new(0, 2)
    ));
}

#[test]
fn capacity_is_checked() {
    let ci = DsepBackend::new(Dag::empty(6));
    assert!(matches!(
        sgs_skeleton(&ci, 5),
        Err(BaselineError::Capacity { p: 6, cap: 5 })
    ));
    assert!(matches!(pc_skeleton(&ci, 5), Err(BaselineError::Capacity { .. })));
}

#[test]
fn pc_tests_fewer_sets_than_sgs() {
    let g = dag1(5, &[(1, 2), (2, 3), (3, 4), (4, 5)]);
    let ci = DsepBackend::new(g);
    let sgs = sgs_skeleton(&ci, DEFAULT_SGS_MAX_P).unwrap();
    let pc = pc_skeleton(&ci, DEFAULT_SGS_MAX_P).unwrap();
    assert_eq!(sgs.skeleton, pc.skeleton);
    assert!(pc.tests < sgs.tests);
    // Sepsets are the first found: smallest size, then lexicographic.
    assert_eq!(sgs.sepsets.get(0, 4), Some(set(&[1])));
}

#[test]
fn json_mirrors_the_sp_schema() {
    let r = run_baseline(Method::Sgs, &detectable_backend(), DEFAULT_SGS_MAX_P).unwrap();
    let v = r.to_json(LabelBase::One);
    assert_eq!(v["method"], "sgs");
    assert_eq!(v["edge_count"], 3);
    assert_eq!(v["unique_class"], true);
    assert_eq!(v["classes"].as_array().unwrap().len(), 1);
    assert_eq!(v["skeleton"], serde_json::json!([[1, 2], [2, 3], [3, 4]]));
    assert_eq!(v["sepsets"][0]["pair"], serde_json::json!([1, 3]));
}

#[test]
fn pipelines_recover_the_pattern_under_dsep() {
    let mut r = rng(50);
    for i in 0..100 {
        let p = 2 + i % 5;
        let g = random_dag(p, 0.5, &mut r);
        let ci = DsepBackend::new(g.clone());
        for m in [Method::Sgs, Method::Pc] {
            let out = run_baseline(m, &ci, DEFAULT_SGS_MAX_P).unwrap();
            assert_eq!(out.pattern, pattern_of(&g), "{m:?} on {g:?}");
        }
    }
}

#[test]
fn sgs_skeleton_is_inside_every_g_pi() {
    let mut r = rng(51);
    for i in 0..60 {
        let p = 2 + i % 3;
        let ci = perturbed(&random_dag(p, 0.5, &mut r), 4, &mut r);
        let sgs = sgs_skeleton(&ci, DEFAULT_SGS_MAX_P).unwrap().skeleton;
        for order in permutations(p) {
            let g_pi = build_dag_for_permutation(&Permutation::new(order).unwrap(), &ci);
            assert!(sgs.is_subset(&skeleton(&g_pi)));
        }
    }
}

/// A pair survives SGS exactly when no conditioning set separates it.
fn brute_sgs(ci: &dyn CiBackend) -> BTreeSet<Pair> {
    let triples = every_triple(ci.p());
    let mut out = BTreeSet::new();
    for j in 0..ci.p() {
        for k in j + 1..ci.p() {
            if !triples
                .iter()
                .any(|t| t.j == j && t.k == k && ci.is_independent(j, k, t.s))
            {
                out.insert(Pair::new(j, k));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn sgs_matches_definition_and_pc_keeps_more((_g, ci) in arb_backend(2, 6, 10)) {
        let sgs = sgs_skeleton(&ci, DEFAULT_SGS_MAX_P).unwrap();
        let pc = pc_skeleton(&ci, DEFAULT_SGS_MAX_P).unwrap();
        prop_assert_eq!(&sgs.skeleton, &brute_sgs(&ci));
        prop_assert!(sgs.skeleton.is_subset(&pc.skeleton));
        for (e, s) in sgs.sepsets.iter().chain(pc.sepsets.iter()) {
            prop_assert!(ci.is_independent(e.lo(), e.hi(), s));
        }
        prop_assert_eq!(sgs.sepsets.len() + sgs.skeleton.len(), ci.p() * (ci.p() - 1) / 2);
        prop_assert_eq!(pc.sepsets.len() + pc.skeleton.len(), ci.p() * (ci.p() - 1) / 2);
    }

    #[test]
    fn pc_equals_sgs_under_faithfulness(g in arb_dag(1, 7)) {
        let ci = DsepBackend::new(g.clone());
        let sgs = run_baseline(Method::Sgs, &ci, DEFAULT_SGS_MAX_P).unwrap();
        let pc = run_baseline(Method::Pc, &ci, DEFAULT_SGS_MAX_P).unwrap();
        prop_assert_eq!(&sgs.pattern, &pc.pattern);
        prop_assert_eq!(&sgs.pattern, &pattern_of(&g));
    }

    #[test]
    fn explicit_round_trip_keeps_baselines(g in arb_dag(2, 5)) {
        let explicit = ExplicitBackend::from_dag(&g);
        let dsep = DsepBackend::new(g);
        for m in [Method::Sgs, Method::Pc] {
            prop_assert_eq!(
                run_baseline(m, &explicit, DEFAULT_SGS_MAX_P).unwrap(),
                run_baseline(m, &dsep, DEFAULT_SGS_MAX_P).unwrap()
            );
        }
    }
}
