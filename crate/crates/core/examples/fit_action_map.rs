//! Complete the action matrix of two demonstrated floors with the full
//! spatial + object + scene kernel and inspect the fit.

use action_maps::experiments::{action_map_from_factors, Problem, RunSettings};
use action_maps::synthetic::{generate_dataset, WorldSpec};

pub fn run_example() -> action_maps::Result<()> {
    let ds = generate_dataset(&WorldSpec::compact(), 2, 3)?.dataset;
    let mut settings = RunSettings::default();
    settings.solver.max_iters = 400;

    let problem = Problem::build(&ds, &[0, 1], &[true, true])?;
    let fit = problem.fit(&settings)?;
    let first = fit.trace[0];
    let last = *fit.trace.last().unwrap();
    println!("{} rows x {} activities", problem.bundle.num_rows(), problem.bundle.num_cols());
    println!("objective {first:.3e} -> {last:.3e} after {} iterations", fit.iterations);
    assert!(fit.trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));

    // the predicted map is dense: every cell gets a score per activity
    let am = action_map_from_factors(&fit.factors);
    let names = ds.vocabulary().names();
    let scene0 = am.rows(problem.rows(0)).normalized();
    for (a, name) in names.iter().enumerate() {
        let col = scene0.values().column(a);
        let top = col.iter().filter(|&&v| v > 0.8).count();
        println!("{name:>16}: {top} cells above 0.8 of the peak");
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
