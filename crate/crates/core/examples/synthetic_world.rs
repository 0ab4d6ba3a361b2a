//! Generate a seeded two-floor dataset, print its sparsity and write it out
//! in the text format the command line reads.

use action_maps::io::{read_dataset, write_dataset};
use action_maps::synthetic::{generate_dataset, WorldSpec};

pub fn run_example() -> action_maps::Result<()> {
    let generated = generate_dataset(&WorldSpec::compact(), 2, 7)?;
    for (scene, layout) in generated.dataset.scenes.iter().zip(&generated.layouts) {
        let st = scene.grid.stats();
        let rooms: Vec<&str> = layout.rooms.iter().map(|r| r.kind.as_str()).collect();
        println!("{}: rooms {:?}", scene.id(), rooms);
        println!("  explored {:.1}%, demonstrated {:.2}%, {} objects", 100.0 * st.r_e, 100.0 * st.r_a, layout.objects.len());
    }

    let dir = std::env::temp_dir().join(format!("action-maps-world-{}", std::process::id()));
    write_dataset(&dir, &generated.dataset)?;
    let back = read_dataset(&dir)?;
    assert_eq!(back, generated.dataset);
    println!("wrote and re-read {}", dir.display());
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
