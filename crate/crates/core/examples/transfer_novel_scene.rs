//! Predict a floor nobody has demonstrated on: demonstrations come from a
//! source floor only and appearance kernels carry them across.

use action_maps::experiments::{transfer, RunSettings};
use action_maps::io::format_summary_table;
use action_maps::synthetic::{generate_dataset, WorldSpec};

pub fn run_example() -> action_maps::Result<()> {
    let ds = generate_dataset(&WorldSpec::compact(), 2, 0)?.dataset;
    let mut settings = RunSettings::default();
    settings.solver.max_iters = 400;
    let report = transfer(&ds, &[0], &[1], &settings)?;
    println!("sources {:?} -> targets {:?}", report.sources, report.targets);
    let rows: Vec<_> = report.rows.iter().map(|r| (r.method.clone(), r.summary)).collect();
    print!("{}", format_summary_table(&rows));
    Ok(())
}

fn main() {
    run_example().unwrap();
}
