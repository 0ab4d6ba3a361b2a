mod common;

use action_maps::localization::*;
use action_maps::rwnmf::ActionMap;
use action_maps::scene::Cell;
use ndarray::Array2;
use proptest::prelude::*;

fn map(values: Vec<f64>, a: usize) -> ActionMap {
    let m = values.len() / a;
    ActionMap::new(Array2::from_shape_vec((m, a), values).unwrap()).unwrap()
}

/// Ranking by the obvious route: sort (score, -index) pairs.
fn sort_oracle(col: &[f64], width: usize) -> Vec<Cell> {
    let mut pairs: Vec<(f64, usize)> = col.iter().copied().zip(0..).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    pairs.into_iter().map(|(_, i)| Cell::new(i % width, i / width)).collect()
}

/// K-best discrepancy of a single step computed from scratch for every K.
fn brute_discrepancy(ranked: &[Cell], target: Cell, k: usize) -> f64 {
    ranked[..k].iter().map(|c| c.distance(&target)).fold(f64::INFINITY, f64::min)
}

fn grid_values() -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (2usize..7, 2usize..6, 1usize..4).prop_flat_map(|(w, h, a)| {
        // coarse values so ties actually occur
        (Just(w), Just(a), proptest::collection::vec((0u8..5).prop_map(|v| v as f64 / 4.0), w * h * a))
    })
}

#[test]
fn hand_ranked_example() {
    // 3x2 scene, one activity
    let am = map(vec![0.2, 0.9, 0.2, 0.5, 0.9, 0.0], 1);
    let ranked = rank_locations(&am, 0, 3).unwrap();
    let expect = [(1, 0), (1, 1), (0, 1), (0, 0), (2, 0), (2, 1)];
    assert_eq!(ranked, expect.iter().map(|&(x, y)| Cell::new(x, y)).collect::<Vec<_>>());
    let q = LocalizationQuery::new(vec![QueryStep::new(0, Cell::new(2, 1))]).unwrap();
    let curve = discrepancy_curve(&am, 3, &[q], 6, Fusion::Independent).unwrap();
    let s2 = 2f64.sqrt();
    assert_eq!(curve.aggregate, vec![s2, 1.0, 1.0, 1.0, 1.0, 0.0]);
    assert_eq!(curve.first_k_below(0, 1.0), Some(6));
}

#[test]
fn label_queries_cover_every_label() {
    let grid = common::fixture::scene();
    let qs = label_queries(&grid);
    let labels: usize = grid.cells().map(|c| grid.labels(c).len()).sum();
    assert_eq!(qs.len(), labels);
    for q in &qs {
        assert!(grid.has_label(q.steps[0].true_cell, q.steps[0].activity));
    }
    assert!(qs.windows(2).all(|w| w[0].steps[0].activity <= w[1].steps[0].activity));
}

#[test]
fn invalid_queries_are_rejected() {
    let am = map(vec![0.1; 6], 1);
    assert!(LocalizationQuery::new(vec![]).is_err());
    let q = LocalizationQuery::new(vec![QueryStep::new(1, Cell::new(0, 0))]).unwrap();
    assert!(discrepancy_curve(&am, 3, &[q], 4, Fusion::Independent).is_err());
    let q = LocalizationQuery::new(vec![QueryStep::new(0, Cell::new(0, 5))]).unwrap();
    assert!(discrepancy_curve(&am, 3, &[q.clone()], 4, Fusion::Independent).is_err());
    assert!(discrepancy_curve(&am, 4, &[q], 4, Fusion::Independent).is_err());
    assert!(rank_locations(&am, 2, 3).is_err());
}

#[test]
fn fused_steps_rank_on_the_product() {
    // activity 1 alone peaks at cell 0; times activity 0 it peaks at cell 2
    let am = map(vec![0.1, 1.0, 0.5, 0.2, 1.0, 0.9], 2);
    let q = LocalizationQuery::new(vec![QueryStep::new(0, Cell::new(2, 0)), QueryStep::new(1, Cell::new(2, 0))]).unwrap();
    let ind = discrepancy_curve(&am, 3, &[q.clone()], 1, Fusion::Independent).unwrap();
    let fused = discrepancy_curve(&am, 3, &[q], 1, Fusion::PreviousProduct).unwrap();
    assert_eq!(ind.per_activity[1].as_ref().unwrap()[0], 2.0);
    assert_eq!(fused.per_activity[1].as_ref().unwrap()[0], 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ranking_matches_sort_oracle((w, a, vals) in grid_values()) {
        let am = map(vals.clone(), a);
        for c in 0..a {
            let col: Vec<f64> = vals.iter().skip(c).step_by(a).copied().collect();
            prop_assert_eq!(rank_locations(&am, c, w).unwrap(), sort_oracle(&col, w));
        }
    }

    #[test]
    fn curves_are_non_increasing_and_match_brute_force((w, a, vals) in grid_values(), picks in proptest::collection::vec((any::<usize>(), any::<usize>()), 1..8)) {
        let am = map(vals.clone(), a);
        let m = vals.len() / a;
        let qs: Vec<LocalizationQuery> = picks.iter().map(|&(act, i)| {
            let i = i % m;
            LocalizationQuery::new(vec![QueryStep::new(act % a, Cell::new(i % w, i / w))]).unwrap()
        }).collect();
        let curve = discrepancy_curve(&am, w, &qs, m, Fusion::Independent).unwrap();
        prop_assert!(curve.aggregate.windows(2).all(|p| p[1] <= p[0]));
        for pa in curve.per_activity.iter().flatten() {
            prop_assert!(pa.windows(2).all(|p| p[1] <= p[0]));
        }
        prop_assert_eq!(*curve.aggregate.last().unwrap(), 0.0);
        for k in [1, m / 2 + 1, m] {
            let brute: f64 = qs.iter().map(|q| {
                let s = q.steps[0];
                let col: Vec<f64> = vals.iter().skip(s.activity).step_by(a).copied().collect();
                brute_discrepancy(&sort_oracle(&col, w), s.true_cell, k)
            }).sum::<f64>() / qs.len() as f64;
            prop_assert!((curve.aggregate[k - 1] - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn query_order_does_not_matter((w, a, vals) in grid_values(), picks in proptest::collection::vec((any::<usize>(), any::<usize>()), 1..8), rot in any::<usize>()) {
        let am = map(vals.clone(), a);
        let m = vals.len() / a;
        let mut qs: Vec<LocalizationQuery> = picks.iter().map(|&(act, i)| {
            let i = i % m;
            LocalizationQuery::new(vec![QueryStep::new(act % a, Cell::new(i % w, i / w))]).unwrap()
        }).collect();
        let before = discrepancy_curve(&am, w, &qs, m, Fusion::Independent).unwrap();
        let n = qs.len();
        qs.rotate_left(rot % n);
        qs.reverse();
        let after = discrepancy_curve(&am, w, &qs, m, Fusion::Independent).unwrap();
        for (x, y) in before.aggregate.iter().zip(&after.aggregate) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert_eq!(before.steps_per_activity, after.steps_per_activity);
    }
}
