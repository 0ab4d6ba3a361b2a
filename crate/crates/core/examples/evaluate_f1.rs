//! The image-level F1 protocol on a hand-built map: cells inside each
//! camera's view triangle are scored, thresholds are swept and per-activity
//! results are weighted by how many images show the activity.

use action_maps::dataset::Dataset;
use action_maps::evaluation::{aggregate, evaluate_scene, f1_sweep, EvalConfig, ImagePose, ViewTriangle};
use action_maps::rwnmf::ActionMap;
use action_maps::synthetic::{generate_dataset, WorldSpec};
use ndarray::Array2;

fn oracle_map(ds: &Dataset) -> action_maps::Result<ActionMap> {
    // ground truth itself, the best any method can do
    let grid = &ds.scenes[0].grid;
    let mut v = Array2::zeros((grid.num_cells(), grid.num_activities()));
    for (i, c) in grid.cells().enumerate() {
        for &a in grid.labels(c) {
            v[[i, a]] = 1.0;
        }
    }
    ActionMap::new(v)
}

pub fn run_example() -> action_maps::Result<()> {
    let tri = ViewTriangle::from_pose(&ImagePose::new([5.0, 5.0], [1.0, 0.0])?, &EvalConfig::default())?;
    println!("view triangle {:?}", tri.vertices());

    let sweep = f1_sweep(&[0.9, 0.2, 0.6, 0.1], &[true, false, true, false], 100)?;
    println!("toy sweep: max F1 {:.3}, mean F1 {:.3}", sweep.max_f1, sweep.mean_f1);
    let (w, u) = aggregate(&[1.0, 0.0], &[3, 1])?;
    println!("aggregate of F1 (1, 0) over counts (3, 1): weighted {w}, unweighted {u}");

    let ds = generate_dataset(&WorldSpec::compact(), 1, 11)?.dataset;
    let scene = &ds.scenes[0];
    let cfg = EvalConfig::default();
    let perfect = evaluate_scene(&oracle_map(&ds)?, &scene.grid, &scene.poses, &cfg)?;
    let flat = ActionMap::new(Array2::from_elem((scene.grid.num_cells(), 6), 1.0))?;
    let constant = evaluate_scene(&flat, &scene.grid, &scene.poses, &cfg)?;
    println!("ground truth map:  {:?}", perfect.summary);
    println!("constant map:      {:?}", constant.summary);
    assert_eq!(perfect.summary.weighted_max_f1, 1.0);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
