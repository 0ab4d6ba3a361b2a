//! From a reconstruction to grid cells: fit the plane through the camera
//! centers, find the floor below it with RANSAC, recover metric scale from
//! the wearer's height and drop a detected object onto the grid.

use action_maps::geometry::{
    backproject_detection, estimate_metric_scale, fit_plane_least_squares, project_to_grid, refine_ground_plane_ransac,
    Point3, RansacParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> action_maps::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // reconstruction units are half a meter; the wearer's eyes are 1.6 m up
    let units_per_m = 2.0;
    let eye = 1.6 * units_per_m;

    let cameras: Vec<Point3> = (0..40)
        .map(|_| Point3::new(rng.random_range(0.0..20.0), rng.random_range(0.0..12.0), eye + rng.random_range(-0.02..0.02)))
        .collect();
    let height_plane = fit_plane_least_squares(&cameras)?;

    let mut points: Vec<Point3> = (0..700)
        .map(|_| Point3::new(rng.random_range(0.0..20.0), rng.random_range(0.0..12.0), rng.random_range(-0.01..0.01)))
        .collect();
    // furniture and walls
    points.extend((0..300).map(|_| Point3::new(rng.random_range(0.0..20.0), rng.random_range(0.0..12.0), rng.random_range(0.2..4.0))));

    let ground = refine_ground_plane_ransac(&height_plane, &points, &RansacParams::default(), eye)?;
    let tilt = ground.angle_to(&height_plane).to_degrees();
    let scale = estimate_metric_scale(&ground, &height_plane, 1.6)?;
    println!("ground normal {:?}, offset {:.4}", ground.normal().as_slice(), ground.offset());
    println!("tilt to camera plane {tilt:.3} deg, {scale:.4} m per unit");

    // 0.25 m cells expressed in reconstruction units
    let cell = 0.25 / scale;
    let chair = [Point3::new(4.1, 6.0, 0.9), Point3::new(4.5, 6.3, 1.0), Point3::new(4.3, 5.8, 0.2)];
    let at = backproject_detection(&chair, &ground, [0.0, 0.0], cell)?;
    let camera_cell = project_to_grid(&ground, &cameras[0], [0.0, 0.0], cell);
    println!("chair lands at {at:.2?}, first camera in cell {camera_cell:?}");
    Ok(())
}

fn main() {
    run_example().unwrap();
}
