//! Where did that happen? Rank a completed map's cells for each observed
//! activity and measure how many guesses it takes to get close.

use action_maps::experiments::{run_full, RunSettings};
use action_maps::localization::{discrepancy_curve, label_queries, rank_locations, Fusion};
use action_maps::synthetic::{generate_dataset, WorldSpec};

pub fn run_example() -> action_maps::Result<()> {
    let ds = generate_dataset(&WorldSpec::compact(), 1, 0)?.dataset;
    let mut settings = RunSettings::default();
    settings.solver.max_iters = 400;
    let run = run_full(&ds, &[0], &settings)?;
    let grid = &ds.scenes[0].grid;
    let am = run.action_map.normalized();

    let wash = ds.vocabulary().index_of("wash").unwrap();
    let best: Vec<_> = rank_locations(&am, wash, grid.width())?.into_iter().take(3).collect();
    println!("best guesses for wash: {best:?}");

    let queries = label_queries(grid);
    let curve = discrepancy_curve(&am, grid.width(), &queries, 200, Fusion::Independent)?;
    for (a, name) in ds.vocabulary().names().iter().enumerate() {
        let k = curve.first_k_below(a, 2.0);
        println!("{name:>16}: {:>3} sites, within 2 cells after {k:?} guesses", curve.steps_per_activity[a]);
    }
    assert!(curve.aggregate.windows(2).all(|w| w[1] <= w[0]));
    Ok(())
}

fn main() {
    run_example().unwrap();
}
