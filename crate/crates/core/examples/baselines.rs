//! The two reference methods: an action map read straight off object
//! detections, and weighted NMF with the features appended as columns.

use action_maps::baselines::{augmented_wnmf, detection_action_map};
use action_maps::evaluation::{evaluate_scene, EvalConfig};
use action_maps::experiments::Problem;
use action_maps::rwnmf::SolverParams;
use action_maps::synthetic::{generate_dataset, WorldSpec};

pub fn run_example() -> action_maps::Result<()> {
    let ds = generate_dataset(&WorldSpec::compact(), 1, 6)?.dataset;
    let scene = &ds.scenes[0];
    for (f, name) in ds.object_categories.iter().enumerate() {
        let acts: Vec<&str> = ds.category_map.activities_of(f).iter().filter_map(|&a| ds.vocabulary().name(a)).collect();
        println!("{name:>10} -> {acts:?}");
    }

    let cfg = EvalConfig::default();
    let det = detection_action_map(&scene.features.object_scores.view(), &ds.category_map)?;
    let det_eval = evaluate_scene(&det, &scene.grid, &scene.poses, &cfg)?;
    println!("Det.  {:?}", det_eval.summary);

    let problem = Problem::build(&ds, &[0], &[true])?;
    let params = SolverParams { max_iters: 300, ..SolverParams::default() };
    let nmf = augmented_wnmf(
        &problem.bundle,
        &scene.features.scene_scores.view(),
        &scene.features.object_scores.view(),
        &problem.explored_rows(&ds),
        &params,
    )?;
    let nmf_eval = evaluate_scene(&nmf.action_map, &scene.grid, &scene.poses, &cfg)?;
    println!("NMF   {:?} ({} feature columns)", nmf_eval.summary, nmf.feature_columns);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
