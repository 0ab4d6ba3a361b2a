//! Scores as demonstrations accumulate. Subsets are prefixes of one seeded
//! ordering, so a larger fraction always contains the smaller ones.

use action_maps::experiments::{elapse, RunSettings};
use action_maps::synthetic::{generate_dataset, sample_demonstrations, WorldSpec};

pub fn run_example() -> action_maps::Result<()> {
    let ds = generate_dataset(&WorldSpec::compact(), 2, 2)?.dataset;
    let grid = &ds.scenes[0].grid;
    let small = sample_demonstrations(grid, 0.25, 9)?;
    let large = sample_demonstrations(grid, 0.75, 9)?;
    assert_eq!(small[..], large[..small.len()]);

    let mut settings = RunSettings::default();
    settings.solver.max_iters = 400;
    for p in elapse(&ds, &[0, 1], &[0.1, 0.5, 1.0], 9, &settings)? {
        println!(
            "fraction {:.1}: {:>2} demonstrations, weighted mean F1 {:.4}, mean F1 {:.4}",
            p.fraction, p.demonstrations, p.summary.weighted_mean_f1, p.summary.mean_f1
        );
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
