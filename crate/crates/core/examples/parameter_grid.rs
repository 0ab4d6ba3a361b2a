//! A reduced sweep over the kernel mixing weight, smoothness and chi-squared
//! bandwidth for every kernel variant, summarized across runs.

use action_maps::evaluation::{run_parameter_grid, GridSpec};
use action_maps::experiments::RunSettings;
use action_maps::side_info::KernelVariant;
use action_maps::synthetic::{generate_dataset, WorldSpec};

pub fn run_example() -> action_maps::Result<()> {
    let ds = generate_dataset(&WorldSpec::compact(), 1, 5)?.dataset;
    let spec = GridSpec {
        alphas: vec![0.0, 0.5],
        lambdas: vec![1e-6],
        gammas: vec![100.0],
    };
    let mut base = RunSettings::default();
    base.solver.max_iters = 300;
    let report = run_parameter_grid(&ds, &[0], &spec, &KernelVariant::ALL, &base)?;
    for run in &report.runs {
        let score = run.outcome.as_ref().map(|o| o.summary.weighted_mean_f1).unwrap_or(f64::NAN);
        println!("{:<4} alpha {:<4} weighted mean F1 {score:.4}", run.variant.as_str(), run.alpha);
    }
    for v in &report.variants {
        let m = v.metrics[1];
        println!("{:<4} max {:.4} mean {:.4} std {:.4}", v.variant.as_str(), m.max, m.mean, m.std);
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
