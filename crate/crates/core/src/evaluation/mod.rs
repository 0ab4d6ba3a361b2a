//! Per-image scoring of action maps and F1 threshold sweeps.
//!
//! Each evaluation image is a camera pose on the grid. The cells inside a
//! small view triangle in front of it give the image its ground truth (any
//! labelled cell) and its predicted score (mean map value). Binary F1 is
//! swept over evenly spaced thresholds per activity and summarized with
//! unweighted and GT-count-weighted averages.

mod grid;

pub use grid::{run_parameter_grid, CrossRunStat, GridOutcome, GridReport, GridRun, GridSpec, VariantSummary};

use crate::error::{Error, Result};
use crate::rwnmf::ActionMap;
use crate::scene::{Cell, SceneGrid};

pub const DEFAULT_FOV_DEG: f64 = 60.0;
pub const DEFAULT_RANGE_CELLS: f64 = 6.0;
pub const DEFAULT_THRESHOLDS: usize = 100;

/// Camera position (continuous grid units) and unit heading on the floor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImagePose {
    pub position: [f64; 2],
    pub heading: [f64; 2],
}

impl ImagePose {
    pub fn new(position: [f64; 2], heading: [f64; 2]) -> Result<Self> {
        let len = heading[0].hypot(heading[1]);
        if !(len > 1e-12) || !len.is_finite() || !position.iter().all(|v| v.is_finite()) {
            return Err(Error::Degenerate("image pose needs a finite position and non-zero heading"));
        }
        // near-unit headings (e.g. read back from a file) are kept as given
        let heading = if (len - 1.0).abs() <= 1e-8 {
            heading
        } else {
            [heading[0] / len, heading[1] / len]
        };
        Ok(ImagePose { position, heading })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalConfig {
    pub fov_deg: f64,
    pub range_cells: f64,
    pub n_thresholds: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            fov_deg: DEFAULT_FOV_DEG,
            range_cells: DEFAULT_RANGE_CELLS,
            n_thresholds: DEFAULT_THRESHOLDS,
        }
    }
}

/// Isosceles triangle with its apex at the camera: the two equal sides have
/// length `range_cells` and open `fov_deg` symmetrically about the heading.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ViewTriangle {
    apex: [f64; 2],
    heading: [f64; 2],
    fov_deg: f64,
    range_cells: f64,
}

impl ViewTriangle {
    pub fn new(apex: [f64; 2], heading: [f64; 2], fov_deg: f64, range_cells: f64) -> Result<Self> {
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(Error::InvalidParameter(format!("fov {fov_deg} outside (0, 180)")));
        }
        if !(range_cells > 0.0) || !range_cells.is_finite() {
            return Err(Error::InvalidParameter(format!("range {range_cells} must be positive")));
        }
        let pose = ImagePose::new(apex, heading)?;
        Ok(ViewTriangle {
            apex: pose.position,
            heading: pose.heading,
            fov_deg,
            range_cells,
        })
    }

    pub fn from_pose(pose: &ImagePose, cfg: &EvalConfig) -> Result<Self> {
        ViewTriangle::new(pose.position, pose.heading, cfg.fov_deg, cfg.range_cells)
    }

    pub fn vertices(&self) -> [[f64; 2]; 3] {
        let half = (self.fov_deg / 2.0).to_radians();
        let rotate = |angle: f64| {
            let (s, c) = angle.sin_cos();
            let [hx, hy] = self.heading;
            [
                self.apex[0] + self.range_cells * (c * hx - s * hy),
                self.apex[1] + self.range_cells * (s * hx + c * hy),
            ]
        };
        [self.apex, rotate(half), rotate(-half)]
    }

    /// Inclusive point-in-triangle test via edge orientation signs.
    pub fn contains(&self, q: [f64; 2]) -> bool {
        let [a, b, c] = self.vertices();
        let edge = |p: [f64; 2], r: [f64; 2]| (r[0] - p[0]) * (q[1] - p[1]) - (r[1] - p[1]) * (q[0] - p[0]);
        let d1 = edge(a, b);
        let d2 = edge(b, c);
        let d3 = edge(c, a);
        const TOL: f64 = 1e-12;
        let has_neg = d1 < -TOL || d2 < -TOL || d3 < -TOL;
        let has_pos = d1 > TOL || d2 > TOL || d3 > TOL;
        !(has_neg && has_pos)
    }
}

/// Cells of a `width x height` grid whose centers lie in `tri`, row-major.
pub fn cells_in_triangle(tri: &ViewTriangle, width: usize, height: usize) -> Vec<Cell> {
    let v = tri.vertices();
    let min_x = v.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let max_x = v.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
    let min_y = v.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let max_y = v.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
    // centers sit at i + 0.5
    let lo = |m: f64| (m - 0.5).ceil().max(0.0) as usize;
    let hi = |m: f64, n: usize| -> Option<usize> {
        let h = (m - 0.5).floor();
        (h >= 0.0).then(|| (h as usize).min(n - 1))
    };
    let (Some(x1), Some(y1)) = (hi(max_x, width), hi(max_y, height)) else {
        return Vec::new();
    };
    let (x0, y0) = (lo(min_x), lo(min_y));
    let mut out = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let cell = Cell::new(x, y);
            if tri.contains(cell.center()) {
                out.push(cell);
            }
        }
    }
    out
}

/// Mean action-map score per activity over the triangle's cells; zero when
/// the triangle covers no cell. `am` rows are the scene's cells, row-major.
pub fn image_scores(am: &ActionMap, tri: &ViewTriangle, grid: &SceneGrid) -> Vec<f64> {
    let cells = cells_in_triangle(tri, grid.width(), grid.height());
    scores_over(am, &cells, grid)
}

fn scores_over(am: &ActionMap, cells: &[Cell], grid: &SceneGrid) -> Vec<f64> {
    let a = am.num_activities();
    if cells.is_empty() {
        return vec![0.0; a];
    }
    let mut acc = vec![0.0; a];
    for cell in cells {
        let row = am.values().row(grid.linear(*cell));
        for (s, &v) in acc.iter_mut().zip(row.iter()) {
            *s += v;
        }
    }
    acc.iter().map(|s| s / cells.len() as f64).collect()
}

/// Per-activity ground truth of an image: true when any triangle cell
/// carries the label.
pub fn image_gt(tri: &ViewTriangle, grid: &SceneGrid) -> Vec<bool> {
    let cells = cells_in_triangle(tri, grid.width(), grid.height());
    gt_over(&cells, grid)
}

fn gt_over(cells: &[Cell], grid: &SceneGrid) -> Vec<bool> {
    let mut gt = vec![false; grid.num_activities()];
    for cell in cells {
        for &a in grid.labels(*cell) {
            gt[a] = true;
        }
    }
    gt
}

/// F1 at each of `n` thresholds `t_k = k / (n + 1)`, `k = 1..=n`, with its
/// maximum and mean.
#[derive(Clone, Debug, PartialEq)]
pub struct F1Sweep {
    pub thresholds: Vec<f64>,
    pub f1: Vec<f64>,
    pub max_f1: f64,
    pub mean_f1: f64,
}

pub fn thresholds(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / (n + 1) as f64).collect()
}

/// `2PR / (P + R)`, defined as 0 when `P + R = 0`. Computed as
/// `2tp / (2tp + fp + fn)`, a single rounding of the exact ratio.
pub fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
}

/// Sweeps binary F1 over thresholds; an image is predicted positive when
/// its score is `>= t`.
pub fn f1_sweep(scores: &[f64], gt: &[bool], n_thresholds: usize) -> Result<F1Sweep> {
    if scores.is_empty() {
        return Err(Error::Empty("no images to evaluate"));
    }
    if scores.len() != gt.len() {
        return Err(Error::LengthMismatch { expected: scores.len(), found: gt.len() });
    }
    if n_thresholds == 0 {
        return Err(Error::InvalidParameter("need at least one threshold".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("image scores"));
    }
    // Positives and negatives sorted ascending; counts at threshold t are
    // the suffix lengths with score >= t.
    let mut pos: Vec<f64> = scores.iter().zip(gt).filter(|(_, &g)| g).map(|(&s, _)| s).collect();
    let mut neg: Vec<f64> = scores.iter().zip(gt).filter(|(_, &g)| !g).map(|(&s, _)| s).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let ts = thresholds(n_thresholds);
    let f1: Vec<f64> = ts
        .iter()
        .map(|&t| {
            let tp = pos.len() - pos.partition_point(|&s| s < t);
            let fp = neg.len() - neg.partition_point(|&s| s < t);
            f1_from_counts(tp, fp, pos.len() - tp)
        })
        .collect();
    let max_f1 = f1.iter().copied().fold(0.0, f64::max);
    let mean_f1 = f1.iter().sum::<f64>() / f1.len() as f64;
    Ok(F1Sweep { thresholds: ts, f1, max_f1, mean_f1 })
}

/// `(weighted, unweighted)` averages of per-activity scores, the weights
/// being the GT counts normalized to sum to one.
pub fn aggregate(per_activity: &[f64], gt_counts: &[usize]) -> Result<(f64, f64)> {
    if per_activity.len() != gt_counts.len() {
        return Err(Error::LengthMismatch { expected: per_activity.len(), found: gt_counts.len() });
    }
    let total: usize = gt_counts.iter().sum();
    if total == 0 {
        return Err(Error::Empty("all ground-truth counts are zero"));
    }
    let weighted = per_activity
        .iter()
        .zip(gt_counts)
        .map(|(&f, &c)| c as f64 / total as f64 * f)
        .sum();
    let unweighted = per_activity.iter().sum::<f64>() / per_activity.len() as f64;
    Ok((weighted, unweighted))
}

/// The four summary columns, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Summary {
    pub weighted_max_f1: f64,
    pub weighted_mean_f1: f64,
    pub max_f1: f64,
    pub mean_f1: f64,
}

impl Summary {
    pub const COLUMNS: [&'static str; 4] = ["w_max_f1", "w_mean_f1", "max_f1", "mean_f1"];

    pub fn as_array(&self) -> [f64; 4] {
        [self.weighted_max_f1, self.weighted_mean_f1, self.max_f1, self.mean_f1]
    }

    pub fn from_array(v: [f64; 4]) -> Summary {
        Summary {
            weighted_max_f1: v[0],
            weighted_mean_f1: v[1],
            max_f1: v[2],
            mean_f1: v[3],
        }
    }
}

/// Scores of one action map on one scene's images.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneEvaluation {
    pub scene_id: String,
    pub images: usize,
    pub max_f1: Vec<f64>,
    pub mean_f1: Vec<f64>,
    pub gt_counts: Vec<usize>,
    pub summary: Summary,
}

/// Evaluates `am` (rows = the scene's cells) on the scene's images. The map
/// is max-normalized per activity first so thresholds span `[0, 1]`.
pub fn evaluate_scene(am: &ActionMap, grid: &SceneGrid, poses: &[ImagePose], cfg: &EvalConfig) -> Result<SceneEvaluation> {
    if am.num_rows() != grid.num_cells() || am.num_activities() != grid.num_activities() {
        return Err(Error::ShapeMismatch(format!(
            "action map is {}x{} but scene {} has {} cells and {} activities",
            am.num_rows(),
            am.num_activities(),
            grid.scene_id(),
            grid.num_cells(),
            grid.num_activities()
        )));
    }
    if poses.is_empty() {
        return Err(Error::Empty("scene has no evaluation images"));
    }
    let am = am.normalized();
    let a = grid.num_activities();
    let mut scores: Vec<Vec<f64>> = vec![Vec::with_capacity(poses.len()); a];
    let mut gts: Vec<Vec<bool>> = vec![Vec::with_capacity(poses.len()); a];
    for pose in poses {
        let tri = ViewTriangle::from_pose(pose, cfg)?;
        let cells = cells_in_triangle(&tri, grid.width(), grid.height());
        let s = scores_over(&am, &cells, grid);
        let g = gt_over(&cells, grid);
        for k in 0..a {
            scores[k].push(s[k]);
            gts[k].push(g[k]);
        }
    }
    let mut max_f1 = Vec::with_capacity(a);
    let mut mean_f1 = Vec::with_capacity(a);
    let mut gt_counts = Vec::with_capacity(a);
    for k in 0..a {
        let sweep = f1_sweep(&scores[k], &gts[k], cfg.n_thresholds)?;
        max_f1.push(sweep.max_f1);
        mean_f1.push(sweep.mean_f1);
        gt_counts.push(gts[k].iter().filter(|&&g| g).count());
    }
    let (weighted_max_f1, unweighted_max) = aggregate(&max_f1, &gt_counts)?;
    let (weighted_mean_f1, unweighted_mean) = aggregate(&mean_f1, &gt_counts)?;
    Ok(SceneEvaluation {
        scene_id: grid.scene_id().to_string(),
        images: poses.len(),
        max_f1,
        mean_f1,
        gt_counts,
        summary: Summary {
            weighted_max_f1,
            weighted_mean_f1,
            max_f1: unweighted_max,
            mean_f1: unweighted_mean,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::ActivityVocabulary;
    use ndarray::Array2;

    #[test]
    fn triangle_validation() {
        assert!(ViewTriangle::new([0.0, 0.0], [1.0, 0.0], 0.0, 3.0).is_err());
        assert!(ViewTriangle::new([0.0, 0.0], [1.0, 0.0], 180.0, 3.0).is_err());
        assert!(ViewTriangle::new([0.0, 0.0], [1.0, 0.0], 60.0, 0.0).is_err());
        assert!(ViewTriangle::new([0.0, 0.0], [0.0, 0.0], 60.0, 1.0).is_err());
    }

    #[test]
    fn tiny_triangle_covers_at_most_apex_cell() {
        let tri = ViewTriangle::new([2.5, 2.5], [1.0, 0.0], 60.0, 0.5).unwrap();
        assert_eq!(cells_in_triangle(&tri, 5, 5), vec![Cell::new(2, 2)]);
        let tri = ViewTriangle::new([2.0, 2.0], [1.0, 0.0], 60.0, 0.5).unwrap();
        assert!(cells_in_triangle(&tri, 5, 5).is_empty());
    }

    #[test]
    fn triangle_outside_grid_is_empty() {
        let tri = ViewTriangle::new([-10.0, -10.0], [-1.0, 0.0], 60.0, 3.0).unwrap();
        assert!(cells_in_triangle(&tri, 5, 5).is_empty());
        let tri = ViewTriangle::new([20.0, 2.0], [1.0, 0.0], 60.0, 3.0).unwrap();
        assert!(cells_in_triangle(&tri, 5, 5).is_empty());
    }

    fn scene_3x1() -> SceneGrid {
        SceneGrid::create(
            "s",
            3,
            1,
            0.25,
            ActivityVocabulary::new(["a", "b"]).unwrap(),
            [(Cell::new(2, 0), 1)],
        )
        .unwrap()
    }

    #[test]
    fn image_score_is_mean_over_triangle() {
        let grid = scene_3x1();
        let am = ActionMap::new(ndarray::array![[0.2, 0.0], [0.8, 0.0], [0.9, 1.0]]).unwrap();
        // apex left of cell 0, covers centers 0.5 and 1.5 only
        let tri = ViewTriangle::new([0.0, 0.5], [1.0, 0.0], 90.0, 2.2).unwrap();
        assert_eq!(cells_in_triangle(&tri, 3, 1), vec![Cell::new(0, 0), Cell::new(1, 0)]);
        assert_eq!(image_scores(&am, &tri, &grid), vec![0.5, 0.0]);
        assert_eq!(image_gt(&tri, &grid), vec![false, false]);
        let wide = ViewTriangle::new([0.0, 0.5], [1.0, 0.0], 90.0, 4.0).unwrap();
        assert_eq!(image_gt(&wide, &grid), vec![false, true]);
    }

    #[test]
    fn image_score_of_uniform_map() {
        let grid = scene_3x1();
        let am = ActionMap::new(Array2::from_elem((3, 2), 0.375)).unwrap();
        let tri = ViewTriangle::new([0.0, 0.5], [1.0, 0.0], 90.0, 4.0).unwrap();
        assert_eq!(image_scores(&am, &tri, &grid), vec![0.375, 0.375]);
    }

    #[test]
    fn separable_scores_reach_perfect_f1() {
        let scores = [0.9, 0.9, 0.1, 0.1, 0.1];
        let gt = [true, true, false, false, false];
        let sweep = f1_sweep(&scores, &gt, 100).unwrap();
        assert_eq!(sweep.max_f1, 1.0);
        assert!(sweep.mean_f1 <= sweep.max_f1);
    }

    #[test]
    fn no_positives_gives_zero_f1() {
        let sweep = f1_sweep(&[0.3, 0.7, 1.0], &[false; 3], 100).unwrap();
        assert!(sweep.f1.iter().all(|&f| f == 0.0));
        assert_eq!(sweep.max_f1, 0.0);
    }

    #[test]
    fn sweep_rejects_bad_input() {
        assert!(f1_sweep(&[], &[], 100).is_err());
        assert!(f1_sweep(&[0.1], &[true, false], 100).is_err());
        assert!(f1_sweep(&[0.1], &[true], 0).is_err());
    }

    #[test]
    fn thresholds_are_interior() {
        let t = thresholds(100);
        assert_eq!(t.len(), 100);
        assert_eq!(t[0], 1.0 / 101.0);
        assert_eq!(t[99], 100.0 / 101.0);
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&[1.0, 0.0], &[3, 1]).unwrap(), (0.75, 0.5));
        let (w, u) = aggregate(&[0.2, 0.6, 0.1], &[4, 4, 4]).unwrap();
        assert_eq!(w, u);
        assert!(aggregate(&[0.5], &[0]).is_err());
        assert!(aggregate(&[0.5], &[1, 2]).is_err());
    }

    #[test]
    fn summary_column_order() {
        assert_eq!(Summary::COLUMNS, ["w_max_f1", "w_mean_f1", "max_f1", "mean_f1"]);
        let s = Summary::from_array([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.weighted_mean_f1, 2.0);
        assert_eq!(s.as_array(), [1.0, 2.0, 3.0, 4.0]);
    }
}
