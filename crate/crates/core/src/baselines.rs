//! Comparison methods: detection-derived action maps and weighted NMF on a
//! matrix augmented with the side-information features.

use ndarray::{concatenate, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::rwnmf::{fit, ActionMap, ActionMatrixBundle, FitResult, SolverParams};
use crate::side_info::GramMatrix;

/// Which activities each object category affords.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoryActivityMap {
    num_activities: usize,
    by_category: Vec<Vec<usize>>,
}

impl CategoryActivityMap {
    /// `by_category[f]` lists the activities afforded by category `f`;
    /// duplicates are removed and each list is sorted.
    pub fn new(num_activities: usize, by_category: Vec<Vec<usize>>) -> Result<Self> {
        let mut by_category = by_category;
        for acts in &mut by_category {
            if let Some(&bad) = acts.iter().find(|&&a| a >= num_activities) {
                return Err(Error::ActivityOutOfRange { index: bad, len: num_activities });
            }
            acts.sort_unstable();
            acts.dedup();
        }
        Ok(CategoryActivityMap { num_activities, by_category })
    }

    pub fn empty(num_activities: usize, num_categories: usize) -> Self {
        CategoryActivityMap {
            num_activities,
            by_category: vec![Vec::new(); num_categories],
        }
    }

    pub fn num_activities(&self) -> usize {
        self.num_activities
    }

    pub fn num_categories(&self) -> usize {
        self.by_category.len()
    }

    pub fn activities_of(&self, category: usize) -> &[usize] {
        self.by_category.get(category).map_or(&[], |v| v.as_slice())
    }

    /// Categories mapped to `activity`, ascending.
    pub fn categories_of(&self, activity: usize) -> Vec<usize> {
        (0..self.by_category.len())
            .filter(|&f| self.by_category[f].contains(&activity))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.by_category.iter().all(Vec::is_empty)
    }
}

/// Action map whose score for activity `a` is the largest object score among
/// the categories mapped to `a`, max-normalized per activity. An empty
/// mapping gives the all-zero map.
pub fn detection_action_map(object_scores: &ArrayView2<f64>, map: &CategoryActivityMap) -> Result<ActionMap> {
    if object_scores.ncols() != map.num_categories() {
        return Err(Error::ShapeMismatch(format!(
            "object scores have {} categories, mapping has {}",
            object_scores.ncols(),
            map.num_categories()
        )));
    }
    let mut values = Array2::<f64>::zeros((object_scores.nrows(), map.num_activities()));
    for (f, col) in object_scores.axis_iter(Axis(1)).enumerate() {
        for &a in map.activities_of(f) {
            for (out, &o) in values.column_mut(a).iter_mut().zip(col.iter()) {
                if o > *out {
                    *out = o;
                }
            }
        }
    }
    Ok(ActionMap::new(values)?.normalized())
}

/// Output of [`augmented_wnmf`].
#[derive(Clone, Debug)]
pub struct AugmentedFit {
    /// Predictions for the activity columns only.
    pub action_map: ActionMap,
    pub fit: FitResult,
    /// Feature columns kept after dropping all-zero ones.
    pub feature_columns: usize,
}

/// Unregularized weighted NMF on `[R | P | O]`.
///
/// Feature columns are max-normalized and all-zero columns are dropped.
/// Feature entries get weight 1 on rows in `observed_rows` and 0 elsewhere;
/// the activity block keeps the bundle's weights. `λ` and `μ` are forced to
/// zero.
pub fn augmented_wnmf(
    bundle: &ActionMatrixBundle,
    scene_scores: &ArrayView2<f64>,
    object_scores: &ArrayView2<f64>,
    observed_rows: &[bool],
    params: &SolverParams,
) -> Result<AugmentedFit> {
    let m = bundle.num_rows();
    for (what, rows) in [("scene scores", scene_scores.nrows()), ("object scores", object_scores.nrows())] {
        if rows != m {
            return Err(Error::ShapeMismatch(format!("{what} have {rows} rows, matrix has {m}")));
        }
    }
    if observed_rows.len() != m {
        return Err(Error::LengthMismatch { expected: m, found: observed_rows.len() });
    }
    let features = concatenate(Axis(1), &[scene_scores.view(), object_scores.view()])
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let mut kept = Vec::new();
    for col in features.axis_iter(Axis(1)) {
        if let Some(&bad) = col.iter().find(|&&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid(bad, "feature entries must be finite and >= 0"));
        }
        let max = col.fold(0.0f64, |acc, &v| acc.max(v));
        if max > 0.0 {
            kept.push(col.mapv(|v| v / max));
        }
    }
    let a = bundle.num_cols();
    let cols = a + kept.len();
    let mut r = Array2::<f64>::zeros((m, cols));
    let mut w = Array2::<f64>::zeros((m, cols));
    r.slice_mut(ndarray::s![.., ..a]).assign(bundle.r());
    w.slice_mut(ndarray::s![.., ..a]).assign(bundle.w());
    for (j, col) in kept.iter().enumerate() {
        r.column_mut(a + j).assign(col);
        for (i, &obs) in observed_rows.iter().enumerate() {
            if obs {
                w[[i, a + j]] = 1.0;
            }
        }
    }
    let augmented = ActionMatrixBundle::new(r, w)?;
    let params = SolverParams { lambda: 0.0, mu: 0.0, ..*params };
    // with lambda = 0 the Gram matrix never enters an update
    let k = GramMatrix::identity(m);
    let result = fit(&augmented, &k, None, &params)?;
    let full = crate::rwnmf::predict(&result.factors);
    let action_map = ActionMap::new(full.values().slice(ndarray::s![.., ..a]).to_owned())?;
    Ok(AugmentedFit {
        action_map,
        fit: result,
        feature_columns: kept.len(),
    })
}
