mod common;

use action_maps::rwnmf::{fit, fit_from, laplacian_regularizer, multiplicative_step, objective, predict, ActionMatrixBundle, FactorPair, SolverParams};
use action_maps::side_info::GramMatrix;
use common::*;
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn objective_matches_brute_force() {
    for seed in 0..5 {
        let inst = random_instance(seed, 30, 5, 3);
        let f = FactorPair::random(30, 5, 3, seed + 100);
        let j = objective(&f.u.view(), &f.v.view(), &inst.bundle, &inst.gram_u(), Some(&inst.gram_v()), inst.params.lambda, inst.params.mu).unwrap();
        let oracle = brute_objective(&f.u, &f.v, &inst);
        assert!((j - oracle).abs() <= 1e-10 * oracle, "{j} vs {oracle}");
    }
}

#[test]
fn fit_trace_records_the_objective() {
    let mut inst = random_instance(7, 25, 4, 2);
    inst.params.max_iters = 20;
    let res = fit(&inst.bundle, &inst.gram_u(), Some(&inst.gram_v()), &inst.params).unwrap();
    assert_eq!(res.trace.len(), res.iterations + 1);
    let oracle = brute_objective(&res.factors.u, &res.factors.v, &inst);
    let last = *res.trace.last().unwrap();
    assert!((last - oracle).abs() <= 1e-10 * oracle);
}

#[test]
fn zero_weight_entries_do_not_matter() {
    let mut r = rng(3);
    let bundle = random_bundle(20, 4, &mut r);
    let mut r2 = bundle.r().clone();
    for ((i, c), w) in bundle.w().indexed_iter() {
        if *w == 0.0 {
            r2[[i, c]] = r.random_range(0.0..5.0);
        }
    }
    let other = ActionMatrixBundle::new(r2, bundle.w().clone()).unwrap();
    let k = GramMatrix::identity(20);
    let p = SolverParams { max_iters: 30, ..SolverParams::default() };
    assert_eq!(fit(&bundle, &k, None, &p).unwrap(), fit(&other, &k, None, &p).unwrap());
}

#[test]
fn exact_factorization_is_a_fixed_point() {
    let truth = FactorPair::random(15, 4, 2, 5);
    let r = predict(&truth).values().clone();
    let bundle = ActionMatrixBundle::new(r, Array2::ones((15, 4))).unwrap();
    let k = GramMatrix::identity(15);
    let p = SolverParams { rank: 2, lambda: 0.0, ..SolverParams::default() };
    let (u, v) = multiplicative_step(&truth.u, &truth.v, &bundle, &k, None, &p).unwrap();
    assert!((&u - &truth.u).iter().all(|d| d.abs() < 1e-12));
    assert!((&v - &truth.v).iter().all(|d| d.abs() < 1e-12));
}

#[test]
fn recovers_noiseless_rank_two() {
    let truth = FactorPair::random(40, 6, 2, 11);
    let r = predict(&truth).values().clone();
    let bundle = ActionMatrixBundle::new(r.clone(), Array2::ones((40, 6))).unwrap();
    let p = SolverParams { rank: 2, lambda: 0.0, mu: 0.0, max_iters: 20_000, rel_tol: 1e-12, ..SolverParams::default() };
    let res = fit(&bundle, &GramMatrix::identity(40), None, &p).unwrap();
    let err = (&predict(&res.factors).values().view() - &r).mapv(|x| x * x).sum().sqrt() / r.mapv(|x| x * x).sum().sqrt();
    assert!(err < 1e-3, "relative error {err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn objective_never_increases(seed in any::<u64>(), m in 3usize..30, a in 1usize..7, rank in 1usize..5) {
        let mut inst = random_instance(seed, m, a, rank);
        inst.params.max_iters = 60;
        let res = fit(&inst.bundle, &inst.gram_u(), Some(&inst.gram_v()), &inst.params).unwrap();
        prop_assert!(worst_increase_above_noise(&res.trace) <= 1e-9);
    }

    #[test]
    fn factors_stay_nonnegative(seed in any::<u64>(), m in 3usize..20, a in 1usize..6) {
        let mut inst = random_instance(seed, m, a, 3);
        inst.params.max_iters = 40;
        let res = fit(&inst.bundle, &inst.gram_u(), None, &inst.params).unwrap();
        prop_assert!(res.factors.u.iter().chain(res.factors.v.iter()).all(|&x| x >= 0.0 && x.is_finite()));
    }

    #[test]
    fn laplacian_trace_form_equals_pairwise_sum(seed in any::<u64>(), n in 1usize..25, d in 1usize..6) {
        let mut r = rng(seed);
        let k = random_gram(n, &mut r);
        let x = Array2::from_shape_fn((n, d), |_| r.random_range(0.0..3.0));
        let trace_form = laplacian_regularizer(&x.view(), &GramMatrix::from_dense(k.clone()).unwrap());
        let pairwise = pairwise_regularizer(&x, &k);
        prop_assert!((trace_form - pairwise).abs() <= 1e-8 * pairwise.max(1.0));
    }

    #[test]
    fn fit_is_deterministic(seed in any::<u64>()) {
        let mut inst = random_instance(seed, 12, 3, 2);
        inst.params.max_iters = 15;
        let a = fit(&inst.bundle, &inst.gram_u(), Some(&inst.gram_v()), &inst.params).unwrap();
        let start = FactorPair::random(12, 3, 2, inst.params.seed);
        let b = fit_from(&inst.bundle, &inst.gram_u(), Some(&inst.gram_v()), &inst.params, start).unwrap();
        prop_assert_eq!(a, b);
    }
}
