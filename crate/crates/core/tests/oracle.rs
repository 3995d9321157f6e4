mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use sp_core::graph::{dsep_set, Dag, VertexSet};
use sp_core::oracle::io::{read_covariance_csv, read_sample_csv, write_sample_csv};
use sp_core::oracle::{
    ci_set, fisher_critical_value, partial_correlation, CachedBackend, CiBackend, CovarianceMatrix, DsepBackend,
    ExplicitBackend, FisherZBackend, GaussianExactBackend, LambdaBackend, OracleError, SampleMatrix, TestConfig,
};
use sp_core::sem::{covariance_of, random_weights, sample, solve_cancellation, LinearSem};

fn gaussian(sigma: &CovarianceMatrix) -> GaussianExactBackend {
    GaussianExactBackend::new(sigma.clone(), TestConfig::default()).unwrap()
}

fn normal_sample(n: usize, p: usize, rng: &mut impl Rng) -> SampleMatrix {
    let data = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    SampleMatrix::new(data).unwrap()
}

/// All `|ρ(j,k|S)|` of `sigma`, smallest nonzero first.
fn partial_correlations(sigma: &CovarianceMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = every_triple(sigma.dim())
        .iter()
        .map(|t| partial_correlation(sigma, t.j, t.k, t.s).unwrap().abs())
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn dsep_backend_examples() {
    let ci = DsepBackend::new(dag1(2, &[(1, 2)]));
    assert!(!ci.is_independent(0, 1, VertexSet::EMPTY));
    let chain = DsepBackend::new(dag1(3, &[(1, 2), (2, 3)]));
    assert!(chain.is_independent(0, 2, set(&[1])));
    assert!(!chain.is_independent(0, 2, VertexSet::EMPTY));
    let cyc = DsepBackend::new(four_cycle());
    assert_eq!(ci_set(&cyc), dsep_set(&four_cycle()));
    assert_eq!(ci_set(&cyc).len(), 2);
}

#[test]
fn explicit_backend_examples() {
    let cycle = unfaithful_cycle_backend();
    assert!(cycle.is_independent(0, 1, set(&[3])));
    assert!(cycle.is_independent(1, 0, set(&[3])));
    assert_eq!(cycle.set().len(), 3);
    let det = detectable_backend();
    assert!(det.is_independent(3, 0, VertexSet::EMPTY));
    let ex1 = type_one_error_backend();
    assert!(!ex1.is_independent(0, 3, set(&[1, 2])));
    assert!(ex1.is_independent(0, 3, set(&[2])));
    assert_eq!(ex1.set().len() + 1, dsep_set(&chain4()).len());

    assert!(ExplicitBackend::new(3, [(0, 0, VertexSet::EMPTY)]).is_err());
    assert!(ExplicitBackend::new(3, [(0, 1, set(&[1]))]).is_err());
    assert!(ExplicitBackend::new(3, [(0, 5, VertexSet::EMPTY)]).is_err());
}

#[test]
fn partial_correlation_examples() {
    let id = CovarianceMatrix::identity(3);
    assert_eq!(partial_correlation(&id, 0, 1, VertexSet::EMPTY).unwrap(), 0.0);

    let sigma = CovarianceMatrix::from_row_slice(3, &[2.0, 0.6, 0.3, 0.6, 1.5, 0.4, 0.3, 0.4, 1.0]).unwrap();
    let r = partial_correlation(&sigma, 0, 1, VertexSet::EMPTY).unwrap();
    assert!((r - 0.6 / (2.0f64 * 1.5).sqrt()).abs() < 1e-15);

    // X1 = e1, X2 = X1 + e2, X3 = X2 + e3 with unit variances.
    let chain = CovarianceMatrix::from_row_slice(3, &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0, 2.0, 3.0]).unwrap();
    assert!(partial_correlation(&chain, 0, 2, set(&[1])).unwrap().abs() < 1e-12);
    assert!(partial_correlation(&chain, 0, 2, VertexSet::EMPTY).unwrap().abs() > 0.5);

    // Closed form for one conditioning variable.
    let (r01, r02, r12) = (
        partial_correlation(&sigma, 0, 1, VertexSet::EMPTY).unwrap(),
        partial_correlation(&sigma, 0, 2, VertexSet::EMPTY).unwrap(),
        partial_correlation(&sigma, 1, 2, VertexSet::EMPTY).unwrap(),
    );
    let want = (r01 - r02 * r12) / ((1.0 - r02 * r02) * (1.0 - r12 * r12)).sqrt();
    assert!((partial_correlation(&sigma, 0, 1, set(&[2])).unwrap() - want).abs() < 1e-12);

    assert!(partial_correlation(&sigma, 0, 0, VertexSet::EMPTY).is_err());
    assert!(partial_correlation(&sigma, 0, 1, set(&[1])).is_err());
}

#[test]
fn covariance_matrix_validation() {
    assert!(matches!(
        CovarianceMatrix::from_row_slice(2, &[1.0, 2.0, 2.0, 1.0]),
        Err(OracleError::NotPositiveDefinite)
    ));
    assert!(CovarianceMatrix::from_row_slice(2, &[1.0, 0.5, 0.4, 1.0]).is_err());
    assert!(CovarianceMatrix::new(DMatrix::zeros(2, 3)).is_err());
}

#[test]
fn gaussian_exact_examples() {
    let diag = CovarianceMatrix::from_row_slice(3, &[2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.5]).unwrap();
    let ci = gaussian(&diag);
    assert!(every_triple(3).iter().all(|t| ci.is_independent(t.j, t.k, t.s)));

    let mut r = rng(5);
    let g = four_cycle();
    for _ in 0..20 {
        let sem = random_weights(&g, &mut r);
        let ci = gaussian(&covariance_of(&sem).unwrap());
        assert_eq!(ci_set(&ci), dsep_set(&g));
    }
}

#[test]
fn cancellation_produces_the_unfaithful_relation() {
    let g = four_cycle();
    let sem = LinearSem::new(
        g.clone(),
        [((0, 1), 0.8), ((0, 3), 0.7), ((1, 2), 0.9), ((2, 3), 0.6)],
        vec![1.0; 4],
    )
    .unwrap();
    let (tuned, residual) = solve_cancellation(&sem, (0, 1), (0, 1, set(&[3])), 10.0, 0.05).unwrap();
    assert!(residual < 1e-9);
    let sigma = covariance_of(&tuned).unwrap();
    assert!(partial_correlation(&sigma, 0, 1, set(&[3])).unwrap().abs() < 1e-9);
    let ci = gaussian(&sigma);
    let mut want = dsep_set(&g);
    want.insert(sp_core::graph::CiTriple::new(0, 1, set(&[3])));
    assert_eq!(ci_set(&ci), want);
}

#[test]
fn lambda_backend_examples() {
    let mut r = rng(8);
    let g = four_cycle();
    let sem = random_weights(&g, &mut r);
    let sigma = covariance_of(&sem).unwrap();
    let exact = ci_set(&gaussian(&sigma));
    assert_eq!(ci_set(&LambdaBackend::new(sigma.clone(), 1e-9).unwrap()), exact);

    let everything = LambdaBackend::new(sigma.clone(), 1.0 - 1e-12).unwrap();
    assert_eq!(ci_set(&everything).len(), every_triple(4).len());

    let m = partial_correlations(&sigma).into_iter().find(|&x| x > 1e-9).unwrap();
    assert_eq!(
        ci_set(&LambdaBackend::new(sigma.clone(), m / 2.0).unwrap()),
        dsep_set(&g)
    );

    for bad in [0.0, 1.0, -0.5, f64::NAN] {
        assert!(LambdaBackend::new(sigma.clone(), bad).is_err(), "{bad}");
    }
}

#[test]
fn fisher_z_examples() {
    let mut r = rng(1);
    let collinear = DMatrix::from_fn(50, 2, |i, _| i as f64 + 1.0);
    let ci = FisherZBackend::new(
        &SampleMatrix::new(collinear).unwrap(),
        TestConfig::with_alpha(0.01).unwrap(),
    )
    .unwrap();
    assert!(!ci.is_independent(0, 1, VertexSet::EMPTY));
    assert_eq!(ci.warnings(), 1);

    let chain = LinearSem::new(
        dag1(3, &[(1, 2), (2, 3)]),
        [((0, 1), 0.8), ((1, 2), -0.6)],
        vec![1.0; 3],
    )
    .unwrap();
    let cfg = TestConfig::with_alpha(0.001).unwrap();
    let mut kept = 0;
    for _ in 0..200 {
        let data = sample(&chain, 10_000, &mut r);
        let ci = FisherZBackend::new(&data, cfg).unwrap();
        kept += ci.is_independent(0, 2, set(&[1])) as usize;
        assert!(!ci.is_independent(0, 2, VertexSet::EMPTY));
    }
    assert!(kept as f64 / 200.0 >= 0.99, "kept {kept}");

    assert!(matches!(
        FisherZBackend::new(&normal_sample(5, 3, &mut r), cfg),
        Err(OracleError::TooFewSamples { .. })
    ));
}

#[test]
fn fisher_statistic_matches_definition() {
    let data = normal_sample(300, 4, &mut rng(3));
    let ci = FisherZBackend::new(&data, TestConfig::with_alpha(0.05).unwrap()).unwrap();
    let n = data.n() as f64;
    let sigma = CovarianceMatrix::new(data.as_matrix().transpose() * data.as_matrix() / n).unwrap();
    for t in every_triple(4) {
        let rho = partial_correlation(&sigma, t.j, t.k, t.s).unwrap();
        let z = 0.5 * ((1.0 + rho) / (1.0 - rho)).ln();
        let stat = (n - t.s.len() as f64 - 3.0).sqrt() * z.abs();
        assert!((ci.statistic(t.j, t.k, t.s).unwrap() - stat).abs() < 1e-9);
        assert_eq!(ci.is_independent(t.j, t.k, t.s), stat < ci.critical_value());
    }
    assert!((fisher_critical_value(0.05) - 1.959963984540054).abs() < 1e-9);
    assert!((fisher_critical_value(0.01) - 2.5758293035489).abs() < 1e-9);
}

/// Type-I rate of the null pair (0,1) given a size-`s` set over `reps` samples.
fn type_one_rate(n: usize, reps: usize, alpha: f64, s: VertexSet, seed: u64) -> f64 {
    let mut r = rng(seed);
    let cfg = TestConfig::with_alpha(alpha).unwrap();
    let p = 2 + s.len();
    let rejected = (0..reps)
        .filter(|_| {
            !FisherZBackend::new(&normal_sample(n, p, &mut r), cfg)
                .unwrap()
                .is_independent(0, 1, s)
        })
        .count();
    rejected as f64 / reps as f64
}

#[test]
fn fisher_size_at_ten_thousand() {
    let rate = type_one_rate(10_000, 2000, 0.01, VertexSet::EMPTY, 17);
    assert!((rate - 0.01).abs() <= 0.006, "rate {rate}");
}

#[test]
fn fisher_size_converges_with_n() {
    let alpha = 0.05;
    let reps = 1000;
    let se = (alpha * (1.0 - alpha) / reps as f64).sqrt();
    for (i, n) in [500, 5000, 50_000].into_iter().enumerate() {
        let rate = type_one_rate(n, reps, alpha, set(&[2]), 100 + i as u64);
        assert!((rate - alpha).abs() <= 3.0 * se, "n = {n}: rate {rate}");
    }
}

#[test]
fn sample_covariance_centering() {
    let data = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 3.0, 2.0, 5.0, 6.0, 7.0, 6.0]);
    let s = SampleMatrix::new(data).unwrap();
    let raw = s.covariance(false);
    assert!((raw[(0, 0)] - (1.0 + 9.0 + 25.0 + 49.0) / 4.0).abs() < 1e-12);
    let centered = s.covariance(true);
    assert!((centered[(0, 0)] - 5.0).abs() < 1e-12);
    assert!((centered[(0, 1)] - 4.0).abs() < 1e-12);
}

#[test]
fn csv_readers() {
    let sigma = read_covariance_csv("a,b\n1,0.5\n0.5,2\n").unwrap();
    assert_eq!(sigma.get(1, 1), 2.0);
    assert_eq!(read_covariance_csv("1,0.5\n0.5,2\n").unwrap(), sigma);
    assert!(read_covariance_csv("1,0.5\n0.5,2,3\n").is_err());
    assert!(read_covariance_csv("1,2\n2,1\n").is_err());

    let s = read_sample_csv("x,y\n1,2\n3,4\n").unwrap();
    assert_eq!((s.n(), s.p()), (2, 2));
    assert_eq!(s.names(), ["x", "y"]);
    assert_eq!(read_sample_csv(&write_sample_csv(&s)).unwrap(), s);
    assert!(read_sample_csv("1,2\n3,4\n").is_err());
    assert!(read_sample_csv("x,y\n1,2\n3\n").is_err());
}

#[test]
fn gaussian_exact_matches_dsep_on_random_sems() {
    let mut r = rng(21);
    let mut agree = 0;
    for i in 0..100 {
        let p = 2 + i % 4;
        let g = random_dag(p, 0.5, &mut r);
        let sem = random_weights(&g, &mut r);
        agree += (ci_set(&gaussian(&covariance_of(&sem).unwrap())) == dsep_set(&g)) as usize;
    }
    assert!(agree >= 99, "{agree} of 100");
}

fn check_symmetric(ci: &dyn CiBackend) {
    for t in every_triple(ci.p()) {
        assert_eq!(ci.is_independent(t.j, t.k, t.s), ci.is_independent(t.k, t.j, t.s));
    }
}

#[test]
fn all_backends_symmetric_and_deterministic() {
    let mut r = rng(4);
    for p in 2..=5 {
        let g = random_dag(p, 0.6, &mut r);
        let sem = random_weights(&g, &mut r);
        let sigma = covariance_of(&sem).unwrap();
        let data = sample(&sem, 200, &mut r);
        let backends: Vec<Box<dyn CiBackend>> = vec![
            Box::new(DsepBackend::new(g.clone())),
            Box::new(perturbed(&g, 3, &mut r)),
            Box::new(gaussian(&sigma)),
            Box::new(LambdaBackend::new(sigma.clone(), 0.1).unwrap()),
            Box::new(FisherZBackend::new(&data, TestConfig::with_alpha(0.05).unwrap()).unwrap()),
        ];
        for ci in &backends {
            check_symmetric(ci.as_ref());
            assert_eq!(ci_set(ci.as_ref()), ci_set(ci.as_ref()));
        }
    }
}

#[test]
fn cache_is_transparent() {
    let mut r = rng(6);
    let g = random_dag(5, 0.5, &mut r);
    let sem = random_weights(&g, &mut r);
    let data = sample(&sem, 300, &mut r);
    let inner: Vec<Box<dyn CiBackend>> = vec![
        Box::new(DsepBackend::new(g.clone())),
        Box::new(gaussian(&covariance_of(&sem).unwrap())),
        Box::new(FisherZBackend::new(&data, TestConfig::with_alpha(0.01).unwrap()).unwrap()),
    ];
    let triples = every_triple(5);
    for b in inner {
        let cached = CachedBackend::new(&b);
        for _ in 0..2000 {
            let t = triples[r.random_range(0..triples.len())];
            let (j, k) = if r.random_bool(0.5) { (t.j, t.k) } else { (t.k, t.j) };
            assert_eq!(cached.is_independent(j, k, t.s), b.is_independent(j, k, t.s));
        }
        let (hits, misses) = cached.stats();
        assert_eq!(hits + misses, 2000);
        assert!(misses as usize <= triples.len());
    }
}

#[test]
fn test_config_validation() {
    assert!(TestConfig::new(0.0, 1e-9).is_err());
    assert!(TestConfig::new(1.0, 1e-9).is_err());
    assert!(TestConfig::new(0.5, 0.0).is_err());
    assert_eq!(TestConfig::default().zero_tol, 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lambda_independence_sets_are_monotone(g in arb_dag(2, 5), seed in any::<u64>(), l1 in 0.001f64..0.5, d in 0.0f64..0.4) {
        let sem = random_weights(&g, &mut rng(seed));
        let sigma = covariance_of(&sem).unwrap();
        let small = ci_set(&LambdaBackend::new(sigma.clone(), l1).unwrap());
        let large = ci_set(&LambdaBackend::new(sigma, l1 + d).unwrap());
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn explicit_backend_is_membership(g in arb_dag(2, 5), seed in any::<u64>()) {
        let ci = perturbed(&g, 4, &mut rng(seed));
        let copy = ExplicitBackend::from_backend(&ci);
        prop_assert_eq!(copy.set(), ci.set());
        for t in every_triple(g.p()) {
            prop_assert_eq!(ci.is_independent(t.j, t.k, t.s), ci.set().contains(&t));
        }
        let _: &Dag = &g;
    }
}
