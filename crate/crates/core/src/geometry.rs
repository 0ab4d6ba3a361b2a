//! Ground-plane estimation and the mapping from reconstruction space onto
//! the 2D floor grid.
//!
//! The pipeline is: fit a *height plane* through camera centers, sweep a
//! parallel candidate downwards while refitting with RANSAC against
//! reconstruction points to find the floor, recover metric scale from the
//! known wearer height, then project poses and detections onto the floor.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Point3 = Vector3<f64>;

/// Default tolerance between height and ground plane normals.
pub const DEFAULT_MAX_TILT_DEG: f64 = 15.0;

/// The plane `{q : normal · q = offset}` with a unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane {
    normal: Vector3<f64>,
    offset: f64,
}

impl Plane {
    /// Normalizes `normal`; fails if it has (near) zero length.
    pub fn new(normal: Vector3<f64>, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len > 1e-12) || !len.is_finite() || !offset.is_finite() {
            return Err(Error::Degenerate("plane normal must be finite and non-zero"));
        }
        Ok(Plane {
            normal: normal / len,
            offset: offset / len,
        })
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn signed_distance(&self, q: &Point3) -> f64 {
        self.normal.dot(q) - self.offset
    }

    pub fn project(&self, q: &Point3) -> Point3 {
        q - self.normal * self.signed_distance(q)
    }

    /// Same plane with the normal flipped if needed so it points the same
    /// way as `reference`'s normal.
    pub fn oriented_like(&self, reference: &Plane) -> Plane {
        if self.normal.dot(&reference.normal) < 0.0 {
            Plane {
                normal: -self.normal,
                offset: -self.offset,
            }
        } else {
            *self
        }
    }

    pub fn translated(&self, distance: f64) -> Plane {
        Plane {
            normal: self.normal,
            offset: self.offset + distance,
        }
    }

    /// Angle between the two planes' normals, ignoring orientation.
    pub fn angle_to(&self, other: &Plane) -> f64 {
        self.normal.dot(&other.normal).abs().min(1.0).acos()
    }

    /// Canonical sign: positive offset, or for planes through the origin a
    /// positive largest-magnitude normal component.
    fn canonical(mut self) -> Plane {
        let flip = if self.offset.abs() > 1e-12 {
            self.offset < 0.0
        } else {
            let n = self.normal;
            let k = n.iamax();
            n[k] < 0.0
        };
        if flip {
            self.normal = -self.normal;
            self.offset = -self.offset;
        }
        self
    }
}

/// 3D camera center with a floor-plane heading.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPose {
    pub position: Point3,
    heading: [f64; 2],
}

impl CameraPose {
    pub fn new(position: Point3, heading: [f64; 2]) -> Result<Self> {
        let len = heading[0].hypot(heading[1]);
        if !(len > 1e-12) || !len.is_finite() {
            return Err(Error::Degenerate("camera heading must be non-zero"));
        }
        Ok(CameraPose {
            position,
            heading: [heading[0] / len, heading[1] / len],
        })
    }

    pub fn heading(&self) -> [f64; 2] {
        self.heading
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RansacParams {
    pub iterations: usize,
    /// Inlier distance in reconstruction units.
    pub inlier_threshold: f64,
    pub min_inlier_fraction: f64,
    pub seed: u64,
    /// Maximum angle between a candidate and the height plane.
    pub max_tilt_deg: f64,
    /// Number of candidate offsets swept below the height plane.
    pub sweep_steps: usize,
    /// Sweep depth as a multiple of the wearer height.
    pub sweep_depth: f64,
}

impl Default for RansacParams {
    fn default() -> Self {
        RansacParams {
            iterations: 1000,
            inlier_threshold: 0.05,
            min_inlier_fraction: 0.2,
            seed: 0,
            max_tilt_deg: DEFAULT_MAX_TILT_DEG,
            sweep_steps: 20,
            sweep_depth: 2.5,
        }
    }
}

impl RansacParams {
    fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.sweep_steps == 0 {
            return Err(Error::InvalidParameter("RANSAC needs at least one iteration and sweep step".into()));
        }
        if !(self.inlier_threshold > 0.0) || !(self.sweep_depth > 0.0) {
            return Err(Error::InvalidParameter("RANSAC threshold and sweep depth must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.min_inlier_fraction) {
            return Err(Error::InvalidParameter("min_inlier_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Total-least-squares plane: normal is the eigenvector of the point
/// covariance with the smallest eigenvalue.
pub fn fit_plane_least_squares(points: &[Point3]) -> Result<Plane> {
    if points.len() < 3 {
        return Err(Error::Degenerate("plane fit needs at least 3 points"));
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    if !cov.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("plane fit input"));
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let largest = eig.eigenvalues[order[2]];
    let middle = eig.eigenvalues[order[1]];
    if !(largest > 0.0) || middle <= largest * 1e-12 {
        return Err(Error::Degenerate("points are coincident or collinear"));
    }
    let normal: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned();
    Plane::new(normal, normal.dot(&centroid)).map(Plane::canonical)
}

fn plane_through(a: &Point3, b: &Point3, c: &Point3) -> Option<Plane> {
    let normal = (b - a).cross(&(c - a));
    let len = normal.norm();
    if len < 1e-12 {
        return None;
    }
    let normal = normal / len;
    Some(Plane {
        normal,
        offset: normal.dot(a),
    })
}

fn count_inliers(plane: &Plane, points: &[Point3], threshold: f64) -> usize {
    points
        .iter()
        .filter(|p| plane.signed_distance(p).abs() <= threshold)
        .count()
}

/// Finds the floor by sweeping a copy of the height plane downwards and
/// refitting it with RANSAC against `points` at each offset.
///
/// "Down" is the side of the height plane holding the majority of points.
/// `user_height` is the wearer height expressed in reconstruction units and
/// only sets the sweep range. The returned plane's normal points the same
/// way as `height_plane`'s.
pub fn refine_ground_plane_ransac(
    height_plane: &Plane,
    points: &[Point3],
    params: &RansacParams,
    user_height: f64,
) -> Result<Plane> {
    params.validate()?;
    if points.is_empty() {
        return Err(Error::Empty("no reconstruction points"));
    }
    if !(user_height > 0.0) || !user_height.is_finite() {
        return Err(Error::invalid(user_height, "user height must be positive"));
    }
    let below = points
        .iter()
        .filter(|p| height_plane.signed_distance(p) < 0.0)
        .count();
    let down = if 2 * below >= points.len() { -1.0 } else { 1.0 };
    let max_tilt = params.max_tilt_deg.to_radians();
    let step = params.sweep_depth * user_height / params.sweep_steps as f64;
    let band = (0.5 * step).max(params.inlier_threshold);

    let mut best: Option<(usize, Plane)> = None;
    for k in 1..=params.sweep_steps {
        let candidate = height_plane.translated(down * step * k as f64);
        let support: Vec<&Point3> = points
            .iter()
            .filter(|p| candidate.signed_distance(p).abs() <= band)
            .collect();
        if support.len() < 3 {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(k as u64));
        for _ in 0..params.iterations {
            let i = rng.random_range(0..support.len());
            let j = rng.random_range(0..support.len());
            let l = rng.random_range(0..support.len());
            if i == j || j == l || i == l {
                continue;
            }
            let Some(plane) = plane_through(support[i], support[j], support[l]) else {
                continue;
            };
            if plane.angle_to(height_plane) > max_tilt {
                continue;
            }
            let inliers = count_inliers(&plane, points, params.inlier_threshold);
            if best.map_or(true, |(b, _)| inliers > b) {
                best = Some((inliers, plane));
            }
        }
    }

    let required = (params.min_inlier_fraction * points.len() as f64).ceil() as usize;
    let (inliers, plane) = match best {
        Some((inliers, plane)) if inliers >= required.max(3) => (inliers, plane),
        Some((inliers, _)) => return Err(Error::NoConsensus { inliers, required }),
        None => return Err(Error::NoConsensus { inliers: 0, required }),
    };
    let support: Vec<Point3> = points
        .iter()
        .filter(|p| plane.signed_distance(p).abs() <= params.inlier_threshold)
        .copied()
        .collect();
    debug_assert_eq!(support.len(), inliers);
    let refit = fit_plane_least_squares(&support)?;
    Ok(refit.oriented_like(height_plane))
}

/// Meters per reconstruction unit, from the gap between the ground and
/// height planes and the wearer's height in meters.
pub fn estimate_metric_scale(ground: &Plane, height_plane: &Plane, user_height_m: f64) -> Result<f64> {
    estimate_metric_scale_with_tolerance(ground, height_plane, user_height_m, DEFAULT_MAX_TILT_DEG)
}

pub fn estimate_metric_scale_with_tolerance(
    ground: &Plane,
    height_plane: &Plane,
    user_height_m: f64,
    max_tilt_deg: f64,
) -> Result<f64> {
    if !(user_height_m > 0.0) || !user_height_m.is_finite() {
        return Err(Error::invalid(user_height_m, "user height must be positive"));
    }
    let angle = ground.angle_to(height_plane);
    if angle > max_tilt_deg.to_radians() {
        return Err(Error::NotParallel {
            angle_deg: angle.to_degrees(),
            tolerance_deg: max_tilt_deg,
        });
    }
    let on_height = height_plane.normal * height_plane.offset;
    let distance = ground.signed_distance(&on_height).abs();
    if !(distance > 0.0) || !distance.is_finite() {
        return Err(Error::invalid(distance, "inter-plane distance must be positive"));
    }
    Ok(user_height_m / distance)
}

/// Orthonormal frame on a plane. The first axis is world x projected onto
/// the plane (world y when x is nearly normal to it); the second completes
/// a right-handed frame with the normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlaneFrame {
    origin: Point3,
    axis_u: Vector3<f64>,
    axis_v: Vector3<f64>,
}

impl PlaneFrame {
    pub fn new(plane: &Plane) -> PlaneFrame {
        let n = plane.normal;
        let mut seed = Vector3::x();
        if n.dot(&seed).abs() > 0.99 {
            seed = Vector3::y();
        }
        let axis_u = (seed - n * n.dot(&seed)).normalize();
        let axis_v = n.cross(&axis_u);
        PlaneFrame {
            origin: n * plane.offset,
            axis_u,
            axis_v,
        }
    }

    /// In-plane coordinates of the orthogonal projection of `q`.
    pub fn coordinates(&self, q: &Point3) -> [f64; 2] {
        let d = q - self.origin;
        [d.dot(&self.axis_u), d.dot(&self.axis_v)]
    }

    pub fn axes(&self) -> (Vector3<f64>, Vector3<f64>) {
        (self.axis_u, self.axis_v)
    }
}

/// Continuous grid coordinates of `q` on `ground`; cell `(i, j)` covers
/// `[i, i + 1) x [j, j + 1)`.
pub fn project_to_grid_continuous(ground: &Plane, q: &Point3, origin: [f64; 2], cell_size: f64) -> [f64; 2] {
    let [u, v] = PlaneFrame::new(ground).coordinates(q);
    [(u - origin[0]) / cell_size, (v - origin[1]) / cell_size]
}

/// Grid cell under `q`. Coordinates can be negative or beyond the grid;
/// bounds are the caller's concern.
pub fn project_to_grid(ground: &Plane, q: &Point3, origin: [f64; 2], cell_size: f64) -> [i64; 2] {
    let [x, y] = project_to_grid_continuous(ground, q, origin, cell_size);
    [x.floor() as i64, y.floor() as i64]
}

/// Floor position of a detected object: the mean of its keypoints, projected
/// onto the ground, in continuous grid units.
pub fn backproject_detection(
    keypoints: &[Point3],
    ground: &Plane,
    origin: [f64; 2],
    cell_size: f64,
) -> Result<[f64; 2]> {
    if keypoints.is_empty() {
        return Err(Error::Empty("detection has no keypoints"));
    }
    let mean = keypoints.iter().fold(Vector3::zeros(), |acc, p| acc + p) / keypoints.len() as f64;
    Ok(project_to_grid_continuous(ground, &mean, origin, cell_size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    const EPS: f64 = 1e-9;

    #[test]
    fn horizontal_plane() {
        let pts: Vec<Point3> = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (3.0, 2.0)]
            .iter()
            .map(|&(x, y)| Point3::new(x, y, 2.0))
            .collect();
        let p = fit_plane_least_squares(&pts).unwrap();
        assert!((p.normal() - Vector3::z()).norm() < EPS);
        assert!((p.offset() - 2.0).abs() < EPS);
    }

    #[test]
    fn oblique_plane() {
        let pts: Vec<Point3> = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (2.0, -3.0), (0.5, 0.25)]
            .iter()
            .map(|&(x, y)| Point3::new(x, y, 1.0 - x - y))
            .collect();
        let p = fit_plane_least_squares(&pts).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((p.normal() - Vector3::new(s, s, s)).norm() < EPS);
        assert!((p.offset() - s).abs() < EPS);
    }

    #[test]
    fn degenerate_inputs() {
        let line: Vec<Point3> = (0..5).map(|i| Point3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(fit_plane_least_squares(&line), Err(Error::Degenerate(_))));
        let same = vec![Point3::new(1.0, 1.0, 1.0); 4];
        assert!(fit_plane_least_squares(&same).is_err());
        assert!(fit_plane_least_squares(&line[..2]).is_err());
    }

    #[test]
    fn metric_scale_examples() {
        let ground = Plane::new(Vector3::z(), 0.0).unwrap();
        let head = Plane::new(Vector3::z(), 1.7).unwrap();
        assert!((estimate_metric_scale(&ground, &head, 1.7).unwrap() - 1.0).abs() < 1e-12);
        let head = Plane::new(Vector3::z(), 0.85).unwrap();
        assert!((estimate_metric_scale(&ground, &head, 1.7).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn metric_scale_errors() {
        let ground = Plane::new(Vector3::z(), 0.0).unwrap();
        assert!(estimate_metric_scale(&ground, &ground, 1.7).is_err());
        let tilted = Plane::new(Vector3::new(0.0, 1.0, 1.0), 1.0).unwrap();
        assert!(matches!(
            estimate_metric_scale(&ground, &tilted, 1.7),
            Err(Error::NotParallel { .. })
        ));
        let head = Plane::new(Vector3::z(), 1.7).unwrap();
        assert!(estimate_metric_scale(&ground, &head, 0.0).is_err());
    }

    #[test]
    fn metric_scale_is_homogeneous() {
        let ground = Plane::new(Vector3::new(0.1, 0.0, 1.0), 0.3).unwrap();
        let head = ground.translated(1.3);
        let s = estimate_metric_scale(&ground, &head, 1.7).unwrap();
        let c = 4.0;
        let ground_c = Plane::new(ground.normal(), ground.offset() * c).unwrap();
        let head_c = Plane::new(head.normal(), head.offset() * c).unwrap();
        let sc = estimate_metric_scale(&ground_c, &head_c, 1.7).unwrap();
        assert!((sc - s / c).abs() < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let floor = Plane::new(Vector3::z(), 0.0).unwrap();
        assert_eq!(project_to_grid(&floor, &Point3::new(0.3, 0.3, 1.7), [0.0, 0.0], 0.25), [1, 1]);
        assert_eq!(project_to_grid(&floor, &Point3::zeros(), [0.0, 0.0], 0.25), [0, 0]);
        assert_eq!(project_to_grid(&floor, &Point3::new(-0.1, 0.6, 0.0), [0.0, 0.0], 0.25), [-1, 2]);
    }

    #[test]
    fn frame_falls_back_to_world_y() {
        let wall = Plane::new(Vector3::x(), 2.0).unwrap();
        let (u, v) = PlaneFrame::new(&wall).axes();
        assert!((u - Vector3::y()).norm() < EPS);
        assert!((u.cross(&v) - wall.normal()).norm() < EPS);
    }

    #[test]
    fn backprojection_examples() {
        let floor = Plane::new(Vector3::z(), 0.0).unwrap();
        let q = Point3::new(0.7, 1.1, 0.4);
        let single = backproject_detection(&[q], &floor, [0.0, 0.0], 0.25).unwrap();
        let direct = project_to_grid_continuous(&floor, &q, [0.0, 0.0], 0.25);
        assert_eq!(single, direct);
        let off = Vector3::new(0.2, -0.3, 0.5);
        let pair = backproject_detection(&[q + off, q - off], &floor, [0.0, 0.0], 0.25).unwrap();
        assert!((pair[0] - direct[0]).abs() < 1e-12 && (pair[1] - direct[1]).abs() < 1e-12);
        assert!(backproject_detection(&[], &floor, [0.0, 0.0], 0.25).is_err());
    }

    #[test]
    fn backprojected_cluster_lands_near_object() {
        let floor = Plane::new(Vector3::z(), 0.0).unwrap();
        let object = Point3::new(2.3, 1.4, 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.1).unwrap();
        for _ in 0..20 {
            let kps: Vec<Point3> = (0..12)
                .map(|_| object + Vector3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng)))
                .collect();
            let g = backproject_detection(&kps, &floor, [0.0, 0.0], 0.25).unwrap();
            let truth = [object.x / 0.25, object.y / 0.25];
            assert!((g[0] - truth[0]).hypot(g[1] - truth[1]) <= 2.0);
        }
    }

    proptest! {
        #[test]
        fn projection_lies_on_plane_and_is_idempotent(
            nx in -1.0f64..1.0, ny in -1.0f64..1.0, nz in 0.2f64..1.0, d in -5.0f64..5.0,
            qx in -10.0f64..10.0, qy in -10.0f64..10.0, qz in -10.0f64..10.0,
        ) {
            let plane = Plane::new(Vector3::new(nx, ny, nz), d).unwrap();
            let q = Point3::new(qx, qy, qz);
            let p = plane.project(&q);
            prop_assert!(plane.signed_distance(&p).abs() < 1e-12 * (1.0 + q.norm()));
            let pp = plane.project(&p);
            prop_assert!((pp - p).norm() < 1e-12 * (1.0 + q.norm()));
            let frame = PlaneFrame::new(&plane);
            let a = frame.coordinates(&q);
            let b = frame.coordinates(&p);
            prop_assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        }

        #[test]
        fn scale_times_distance_is_user_height(
            nx in -0.2f64..0.2, ny in -0.2f64..0.2, d in -3.0f64..3.0, gap in 0.01f64..20.0, h in 0.5f64..2.5,
        ) {
            let ground = Plane::new(Vector3::new(nx, ny, 1.0), d).unwrap();
            let head = ground.translated(gap);
            let s = estimate_metric_scale(&ground, &head, h).unwrap();
            prop_assert!((s * gap - h).abs() < 1e-9);
        }
    }
}
