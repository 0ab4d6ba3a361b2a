//! Locating observed activities on a completed action map.
//!
//! Each detected activity is answered with the map's cells ranked by score.
//! The K-best discrepancy of a query is the distance from its true cell to
//! the closest of the first K guesses, so curves can only fall with K.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rwnmf::ActionMap;
use crate::scene::{Cell, SceneGrid};

/// One observed activity and where it really happened.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryStep {
    pub activity: usize,
    pub true_cell: Cell,
    pub confidence: f64,
}

impl QueryStep {
    pub fn new(activity: usize, true_cell: Cell) -> Self {
        QueryStep { activity, true_cell, confidence: 1.0 }
    }
}

/// A sequence of observed activities in one scene.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalizationQuery {
    pub steps: Vec<QueryStep>,
}

impl LocalizationQuery {
    pub fn new(steps: Vec<QueryStep>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Empty("localization query has no steps"));
        }
        Ok(LocalizationQuery { steps })
    }
}

/// One single-step query per ground-truth label of `grid`, by activity and
/// then in row-major order.
pub fn label_queries(grid: &SceneGrid) -> Vec<LocalizationQuery> {
    (0..grid.num_activities())
        .flat_map(|a| {
            grid.cells()
                .filter(move |&c| grid.has_label(c, a))
                .map(move |c| LocalizationQuery { steps: vec![QueryStep::new(a, c)] })
        })
        .collect()
}

/// How consecutive steps of a query are combined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fusion {
    /// Every step is ranked on its own activity column.
    #[default]
    Independent,
    /// A step is ranked on the product of its column and the previous
    /// step's column, favouring cells that afford both.
    PreviousProduct,
}

/// Cells of a `width`-wide scene ranked by descending score of `activity`,
/// ties in row-major order.
pub fn rank_locations(am: &ActionMap, activity: usize, width: usize) -> Result<Vec<Cell>> {
    if activity >= am.num_activities() {
        return Err(Error::ActivityOutOfRange { index: activity, len: am.num_activities() });
    }
    let col: Vec<f64> = am.values().column(activity).to_vec();
    Ok(rank_scores(&col, width))
}

fn rank_scores(scores: &[f64], width: usize) -> Vec<Cell> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps row-major order among equal scores
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]));
    order.into_iter().map(|i| Cell::new(i % width, i / width)).collect()
}

/// Mean K-best discrepancy, `K = 1..=k_max`, overall and per activity.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscrepancyCurve {
    pub k_max: usize,
    /// `aggregate[k - 1]`: mean over all steps.
    pub aggregate: Vec<f64>,
    /// Per activity; `None` for activities no step observed.
    pub per_activity: Vec<Option<Vec<f64>>>,
    pub steps_per_activity: Vec<usize>,
}

impl DiscrepancyCurve {
    /// Smallest K at which `activity`'s curve falls below `bound`.
    pub fn first_k_below(&self, activity: usize, bound: f64) -> Option<usize> {
        self.per_activity.get(activity)?.as_ref()?.iter().position(|&d| d < bound).map(|i| i + 1)
    }
}

fn prefix_min_distances(ranked: &[Cell], target: Cell, k_max: usize) -> Vec<f64> {
    let mut best = f64::INFINITY;
    ranked
        .iter()
        .take(k_max)
        .map(|c| {
            best = best.min(c.distance(&target));
            best
        })
        .collect()
}

/// Discrepancy curve of `queries` against `am`, the map of one
/// `width x height` scene.
pub fn discrepancy_curve(
    am: &ActionMap,
    width: usize,
    queries: &[LocalizationQuery],
    k_max: usize,
    fusion: Fusion,
) -> Result<DiscrepancyCurve> {
    if queries.is_empty() {
        return Err(Error::Empty("no localization queries"));
    }
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be >= 1".into()));
    }
    let rows = am.num_rows();
    if width == 0 || rows % width != 0 {
        return Err(Error::ShapeMismatch(format!("{rows} map rows do not tile width {width}")));
    }
    let height = rows / width;
    let a = am.num_activities();
    for q in queries {
        for s in &q.steps {
            if s.activity >= a {
                return Err(Error::ActivityOutOfRange { index: s.activity, len: a });
            }
            if s.true_cell.x >= width || s.true_cell.y >= height {
                return Err(Error::CellOutOfBounds {
                    x: s.true_cell.x as i64,
                    y: s.true_cell.y as i64,
                    width,
                    height,
                });
            }
        }
    }
    let k_max = k_max.min(rows);
    let independent: Vec<Vec<Cell>> = (0..a).map(|c| rank_locations(am, c, width)).collect::<Result<_>>()?;

    let per_query: Vec<Vec<(usize, Vec<f64>)>> = queries
        .par_iter()
        .map(|q| {
            q.steps
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let curve = match (fusion, i) {
                        (Fusion::PreviousProduct, i) if i > 0 => {
                            let prev = q.steps[i - 1].activity;
                            let col = am.values().column(s.activity);
                            let prev_col = am.values().column(prev);
                            let fused: Vec<f64> = col.iter().zip(prev_col.iter()).map(|(x, y)| x * y).collect();
                            prefix_min_distances(&rank_scores(&fused, width), s.true_cell, k_max)
                        }
                        _ => prefix_min_distances(&independent[s.activity], s.true_cell, k_max),
                    };
                    (s.activity, curve)
                })
                .collect()
        })
        .collect();

    // sums accumulate in query order so the result is independent of scheduling
    let mut total = vec![0.0; k_max];
    let mut count = 0usize;
    let mut sums = vec![vec![0.0; k_max]; a];
    let mut counts = vec![0usize; a];
    for (activity, curve) in per_query.iter().flatten() {
        for k in 0..k_max {
            total[k] += curve[k];
            sums[*activity][k] += curve[k];
        }
        count += 1;
        counts[*activity] += 1;
    }
    let aggregate = total.iter().map(|s| s / count as f64).collect();
    let per_activity = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| (n > 0).then(|| s.iter().map(|v| v / n as f64).collect()))
        .collect();
    Ok(DiscrepancyCurve {
        k_max,
        aggregate,
        per_activity,
        steps_per_activity: counts,
    })
}
