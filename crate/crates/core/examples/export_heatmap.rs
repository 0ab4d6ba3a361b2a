//! Render each activity of a predicted map as a plain greymap.

use action_maps::experiments::{run_full, RunSettings};
use action_maps::io::{grey_level, write_pgm, write_text};
use action_maps::synthetic::{generate_dataset, WorldSpec};

pub fn run_example() -> action_maps::Result<()> {
    let ds = generate_dataset(&WorldSpec::compact(), 1, 4)?.dataset;
    let mut settings = RunSettings::default();
    settings.solver.max_iters = 300;
    let am = run_full(&ds, &[0], &settings)?.action_map.normalized();
    let grid = &ds.scenes[0].grid;

    let dir = std::env::temp_dir().join(format!("action-maps-heatmaps-{}", std::process::id()));
    for (a, name) in ds.vocabulary().names().iter().enumerate() {
        let col: Vec<f64> = am.values().column(a).to_vec();
        let path = dir.join(format!("{name}.pgm"));
        write_text(&path, &write_pgm(&col, grid.width(), grid.height()))?;
        let bright = col.iter().filter(|&&v| grey_level(v) > 200).count();
        println!("{} ({bright} bright pixels)", path.display());
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
