//! Per-location side information and the location-similarity Gram matrix.
//!
//! Each location carries 2D grid coordinates, a scene-classification score
//! vector `p` and an object score vector `o`. The combined kernel mixes a
//! spatial RBF with chi-squared kernels on `p` and `o`:
//!
//! ```text
//! k(a, b) = (1 - alpha) k_s(x_a, x_b) + alpha/2 k_p(p_a, p_b) + alpha/2 k_o(o_a, o_b)
//! ```
//!
//! The single-appearance variants give the active appearance kernel the full
//! `alpha` weight. `k_o` is zero unless both locations have an object score,
//! and `k_s` is zero across scenes since their coordinate frames are unrelated.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scene::Cell;

/// Radius (in cells) used to average scene-classification scores.
pub const DEFAULT_SCENE_RADIUS: f64 = 2.0;
/// Radius (in cells) of the object-score Gaussian.
pub const OBJECT_RADIUS: f64 = std::f64::consts::SQRT_2;
pub const DEFAULT_CHI2_EPSILON: f64 = 1e-10;
pub const DEFAULT_SPARSIFY_THRESHOLD: f64 = 1e-4;
pub const DEFAULT_MAX_DENSE_ROWS: usize = 20_000;

/// Which side-information kernels are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelVariant {
    /// Spatial only.
    S,
    /// Spatial + object detection.
    SO,
    /// Spatial + scene classification.
    SP,
    /// Spatial + object detection + scene classification.
    SOP,
}

impl KernelVariant {
    pub const ALL: [KernelVariant; 4] = [KernelVariant::S, KernelVariant::SO, KernelVariant::SP, KernelVariant::SOP];
    pub const APPEARANCE: [KernelVariant; 3] = [KernelVariant::SO, KernelVariant::SP, KernelVariant::SOP];

    /// `(spatial, scene, object)` weights for mixing weight `alpha`.
    pub fn weights(self, alpha: f64) -> (f64, f64, f64) {
        match self {
            KernelVariant::S => (1.0, 0.0, 0.0),
            KernelVariant::SO => (1.0 - alpha, 0.0, alpha),
            KernelVariant::SP => (1.0 - alpha, alpha, 0.0),
            KernelVariant::SOP => (1.0 - alpha, alpha / 2.0, alpha / 2.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KernelVariant::S => "S",
            KernelVariant::SO => "SO",
            KernelVariant::SP => "SP",
            KernelVariant::SOP => "SOP",
        }
    }
}

impl fmt::Display for KernelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "S" => Ok(KernelVariant::S),
            "SO" => Ok(KernelVariant::SO),
            "SP" => Ok(KernelVariant::SP),
            "SOP" => Ok(KernelVariant::SOP),
            _ => Err(Error::InvalidParameter(format!("unknown kernel variant {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelConfig {
    pub alpha: f64,
    /// Spatial RBF bandwidth in grid cells.
    pub sigma_s: f64,
    pub gamma_p: f64,
    pub gamma_o: f64,
    pub variant: KernelVariant,
    pub chi2_epsilon: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            alpha: 0.5,
            sigma_s: 2.0,
            gamma_p: 1.0,
            gamma_o: 1.0,
            variant: KernelVariant::SOP,
            chi2_epsilon: DEFAULT_CHI2_EPSILON,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        for (name, v) in [("sigma_s", self.sigma_s), ("gamma_p", self.gamma_p), ("gamma_o", self.gamma_o)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.chi2_epsilon >= 0.0) {
            return Err(Error::InvalidParameter("chi2_epsilon must be >= 0".into()));
        }
        Ok(())
    }
}

/// Side information of one location.
#[derive(Clone, Debug, PartialEq)]
pub struct LocationFeatures {
    /// Scene the location belongs to; spatial similarity is zero across scenes.
    pub scene: usize,
    /// Continuous grid coordinates.
    pub x: [f64; 2],
    pub p: Vec<f64>,
    pub o: Vec<f64>,
    pub has_object: bool,
}

impl LocationFeatures {
    pub fn new(scene: usize, x: [f64; 2], p: Vec<f64>, o: Vec<f64>) -> Self {
        let has_object = o.iter().any(|&v| v > 0.0);
        LocationFeatures { scene, x, p, o, has_object }
    }
}

/// Per-cell scene and object scores of one scene, row-major over cells.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub scene_scores: Array2<f64>,
    pub object_scores: Array2<f64>,
}

impl FeatureTable {
    pub fn zeros(cells: usize, scene_classes: usize, object_categories: usize) -> Self {
        FeatureTable {
            scene_scores: Array2::zeros((cells, scene_classes)),
            object_scores: Array2::zeros((cells, object_categories)),
        }
    }

    pub fn num_cells(&self) -> usize {
        self.scene_scores.nrows()
    }

    pub fn num_scene_classes(&self) -> usize {
        self.scene_scores.ncols()
    }

    pub fn num_object_categories(&self) -> usize {
        self.object_scores.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.scene_scores.nrows() != self.object_scores.nrows() {
            return Err(Error::LengthMismatch {
                expected: self.scene_scores.nrows(),
                found: self.object_scores.nrows(),
            });
        }
        for &v in self.scene_scores.iter().chain(self.object_scores.iter()) {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(v, "feature entries must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// Location features for every cell of a `width`-wide scene, using
    /// cell centers as coordinates.
    pub fn locations(&self, scene: usize, width: usize) -> Vec<LocationFeatures> {
        (0..self.num_cells())
            .map(|i| {
                let cell = Cell::new(i % width, i / width);
                LocationFeatures::new(
                    scene,
                    cell.center(),
                    self.scene_scores.row(i).to_vec(),
                    self.object_scores.row(i).to_vec(),
                )
            })
            .collect()
    }
}

/// Scene-classification score of each cell: mean of the image score vectors
/// taken within `radius` cells (Euclidean, between cell coordinates), or the
/// zero vector when no image is close enough.
pub fn aggregate_scene_scores(
    image_scores: &[(Cell, Vec<f64>)],
    width: usize,
    height: usize,
    radius: f64,
) -> Result<Array2<f64>> {
    if !(radius >= 0.0) {
        return Err(Error::invalid(radius, "radius must be >= 0"));
    }
    let dim = image_scores.first().map_or(0, |(_, s)| s.len());
    for (_, s) in image_scores {
        if s.len() != dim {
            return Err(Error::LengthMismatch { expected: dim, found: s.len() });
        }
    }
    let mut sums = Array2::<f64>::zeros((width * height, dim));
    let mut counts = vec![0usize; width * height];
    let reach = radius.floor() as i64;
    let r2 = radius * radius;
    for (cell, scores) in image_scores {
        let (cx, cy) = (cell.x as i64, cell.y as i64);
        for y in (cy - reach).max(0)..=(cy + reach).min(height as i64 - 1) {
            for x in (cx - reach).max(0)..=(cx + reach).min(width as i64 - 1) {
                let (dx, dy) = ((x - cx) as f64, (y - cy) as f64);
                if dx * dx + dy * dy <= r2 {
                    let i = y as usize * width + x as usize;
                    counts[i] += 1;
                    for (acc, &s) in sums.row_mut(i).iter_mut().zip(scores) {
                        *acc += s;
                    }
                }
            }
        }
    }
    for (mut row, &n) in sums.axis_iter_mut(Axis(0)).zip(&counts) {
        if n > 0 {
            row /= n as f64;
        }
    }
    Ok(sums)
}

/// Object score contributed by a detection at floor distance `z`:
/// `exp(-z^2 / 2r^2) / sqrt(2 r^2 pi)` with `r = sqrt(2)`, zero beyond `r`.
pub fn object_score(z: f64) -> f64 {
    let r2 = OBJECT_RADIUS * OBJECT_RADIUS;
    if z > OBJECT_RADIUS {
        return 0.0;
    }
    (-z * z / (2.0 * r2)).exp() / (2.0 * r2 * std::f64::consts::PI).sqrt()
}

/// Object scores of every cell from back-projected detections given as
/// `(category, continuous grid position)`; each entry is the max score over
/// detections of that category within `r = sqrt(2)` of the cell center.
pub fn aggregate_object_scores(
    detections: &[(usize, [f64; 2])],
    width: usize,
    height: usize,
    num_categories: usize,
) -> Result<Array2<f64>> {
    let mut out = Array2::<f64>::zeros((width * height, num_categories));
    for &(category, [gx, gy]) in detections {
        if category >= num_categories {
            return Err(Error::CategoryOutOfRange { index: category, len: num_categories });
        }
        if !gx.is_finite() || !gy.is_finite() {
            return Err(Error::NonFinite("detection position"));
        }
        let x0 = (gx - 0.5 - OBJECT_RADIUS).ceil().max(0.0) as usize;
        let y0 = (gy - 0.5 - OBJECT_RADIUS).ceil().max(0.0) as usize;
        let x1 = (gx - 0.5 + OBJECT_RADIUS).floor();
        let y1 = (gy - 0.5 + OBJECT_RADIUS).floor();
        if x1 < 0.0 || y1 < 0.0 {
            continue;
        }
        let x1 = (x1 as usize).min(width.saturating_sub(1));
        let y1 = (y1 as usize).min(height.saturating_sub(1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                let [cx, cy] = Cell::new(x, y).center();
                let z = (cx - gx).hypot(cy - gy);
                let s = object_score(z);
                let entry = &mut out[[y * width + x, category]];
                if s > *entry {
                    *entry = s;
                }
            }
        }
    }
    Ok(out)
}

/// Gaussian RBF `exp(-|a - b|^2 / (2 sigma^2))`.
pub fn rbf(a: [f64; 2], b: [f64; 2], sigma: f64) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
}

/// Spatial kernel between two locations; zero across scenes.
pub fn kernel_spatial(a: &LocationFeatures, b: &LocationFeatures, sigma_s: f64) -> f64 {
    if a.scene != b.scene {
        0.0
    } else {
        rbf(a.x, b.x, sigma_s)
    }
}

fn chi2_unchecked(u: &[f64], v: &[f64], gamma: f64, epsilon: f64) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in u.iter().zip(v) {
        let den = a + b + epsilon;
        if den > 0.0 {
            let d = a - b;
            acc += d * d / den;
        }
    }
    (-gamma * acc).exp()
}

/// Exponential chi-squared kernel
/// `exp(-gamma * sum_i (u_i - v_i)^2 / (u_i + v_i + epsilon))`.
/// Terms with a zero denominator contribute nothing.
pub fn kernel_chi2(u: &[f64], v: &[f64], gamma: f64, epsilon: f64) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch { expected: u.len(), found: v.len() });
    }
    if let Some(&bad) = u.iter().chain(v).find(|&&x| !(x >= 0.0)) {
        return Err(Error::invalid(bad, "chi-squared kernel inputs must be >= 0"));
    }
    Ok(chi2_unchecked(u, v, gamma, epsilon))
}

/// Combined side-information similarity of two locations.
pub fn combined_kernel(a: &LocationFeatures, b: &LocationFeatures, cfg: &KernelConfig) -> f64 {
    let (ws, wp, wo) = cfg.variant.weights(cfg.alpha);
    let mut k = 0.0;
    if ws > 0.0 {
        k += ws * kernel_spatial(a, b, cfg.sigma_s);
    }
    if wp > 0.0 {
        k += wp * chi2_unchecked(&a.p, &b.p, cfg.gamma_p, cfg.chi2_epsilon);
    }
    if wo > 0.0 && a.has_object && b.has_object {
        k += wo * chi2_unchecked(&a.o, &b.o, cfg.gamma_o, cfg.chi2_epsilon);
    }
    k
}

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    Dense(Array2<f64>),
    Sparse {
        row_ptr: Vec<usize>,
        cols: Vec<usize>,
        values: Vec<f64>,
    },
}

/// Symmetric, non-negative location-similarity matrix with its degree
/// (row-sum) vector. Stored densely unless thresholding leaves it sparse.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    n: usize,
    storage: Storage,
    degree: Array1<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GramOptions {
    /// Entries below this are dropped.
    pub threshold: f64,
    /// Largest row count built without a threshold.
    pub max_dense_rows: usize,
}

impl Default for GramOptions {
    fn default() -> Self {
        GramOptions {
            threshold: DEFAULT_SPARSIFY_THRESHOLD,
            max_dense_rows: DEFAULT_MAX_DENSE_ROWS,
        }
    }
}

/// Above this fill ratio a thresholded Gram matrix is kept dense.
const DENSE_FILL: f64 = 0.25;

impl GramMatrix {
    /// Wraps an explicit matrix after checking it is square, symmetric
    /// (to 1e-9) and non-negative.
    pub fn from_dense(k: Array2<f64>) -> Result<Self> {
        let n = k.nrows();
        if k.ncols() != n {
            return Err(Error::ShapeMismatch(format!("gram matrix is {}x{}", n, k.ncols())));
        }
        for i in 0..n {
            for j in 0..n {
                let v = k[[i, j]];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::invalid(v, "gram entries must be finite and >= 0"));
                }
                if (v - k[[j, i]]).abs() > 1e-9 {
                    return Err(Error::ShapeMismatch(format!("gram matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        let degree = k.sum_axis(Axis(1));
        Ok(GramMatrix { n, storage: Storage::Dense(k), degree })
    }

    /// Identity similarity (no coupling between distinct rows).
    pub fn identity(n: usize) -> Self {
        GramMatrix::from_rows(n, (0..n).map(|i| vec![(i, 1.0)]).collect())
    }

    fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let degree: Array1<f64> = rows.iter().map(|r| r.iter().map(|&(_, v)| v).sum()).collect();
        let storage = if n > 0 && nnz as f64 >= DENSE_FILL * (n * n) as f64 {
            let mut k = Array2::zeros((n, n));
            for (i, row) in rows.iter().enumerate() {
                for &(j, v) in row {
                    k[[i, j]] = v;
                }
            }
            Storage::Dense(k)
        } else {
            let mut row_ptr = Vec::with_capacity(n + 1);
            let mut cols = Vec::with_capacity(nnz);
            let mut values = Vec::with_capacity(nnz);
            row_ptr.push(0);
            for row in rows {
                for (j, v) in row {
                    cols.push(j);
                    values.push(v);
                }
                row_ptr.push(cols.len());
            }
            Storage::Sparse { row_ptr, cols, values }
        };
        GramMatrix { n, storage, degree }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    pub fn degree(&self) -> &Array1<f64> {
        &self.degree
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(k) => k.iter().filter(|&&v| v != 0.0).count(),
            Storage::Sparse { values, .. } => values.len(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(k) => k[[i, j]],
            Storage::Sparse { row_ptr, cols, values } => {
                let span = row_ptr[i]..row_ptr[i + 1];
                match cols[span.clone()].binary_search(&j) {
                    Ok(pos) => values[span.start + pos],
                    Err(_) => 0.0,
                }
            }
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match &self.storage {
            Storage::Dense(k) => k.clone(),
            Storage::Sparse { .. } => Array2::from_shape_fn((self.n, self.n), |(i, j)| self.get(i, j)),
        }
    }

    /// `K * x` for an `n x d` matrix `x`.
    pub fn apply(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.n, "gram/operand row mismatch");
        match &self.storage {
            Storage::Dense(k) => k.dot(x),
            Storage::Sparse { row_ptr, cols, values } => {
                let mut out = Array2::zeros((self.n, x.ncols()));
                out.axis_iter_mut(Axis(0))
                    .into_par_iter()
                    .enumerate()
                    .for_each(|(i, mut row)| {
                        for idx in row_ptr[i]..row_ptr[i + 1] {
                            let v = values[idx];
                            row.scaled_add(v, &x.row(cols[idx]));
                        }
                    });
                out
            }
        }
    }

    /// `sum_ij K_ij <x_i, x_j>`, i.e. `trace(x^T K x)`.
    pub fn quadratic_form(&self, x: &ArrayView2<f64>) -> f64 {
        let kx = self.apply(x);
        (&kx * x).sum()
    }
}

/// Builds the Gram matrix of `features` under `cfg`. Rows are computed in
/// parallel; entries below `opts.threshold` are dropped.
pub fn build_gram_matrix(features: &[LocationFeatures], cfg: &KernelConfig, opts: &GramOptions) -> Result<GramMatrix> {
    cfg.validate()?;
    let n = features.len();
    if opts.threshold <= 0.0 && n > opts.max_dense_rows {
        return Err(Error::GramTooLarge { rows: n, cap: opts.max_dense_rows });
    }
    if let Some(first) = features.first() {
        for f in features {
            if f.p.len() != first.p.len() {
                return Err(Error::LengthMismatch { expected: first.p.len(), found: f.p.len() });
            }
            if f.o.len() != first.o.len() {
                return Err(Error::LengthMismatch { expected: first.o.len(), found: f.o.len() });
            }
            if let Some(&bad) = f.p.iter().chain(&f.o).find(|&&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::invalid(bad, "feature entries must be finite and >= 0"));
            }
            if !f.x[0].is_finite() || !f.x[1].is_finite() {
                return Err(Error::NonFinite("location coordinates"));
            }
        }
    }
    let threshold = opts.threshold.max(0.0);
    let rows: Vec<Vec<(usize, f64)>> = features
        .par_iter()
        .map(|a| {
            features
                .iter()
                .enumerate()
                .filter_map(|(j, b)| {
                    let k = combined_kernel(a, b, cfg);
                    (k > 0.0 && k >= threshold).then_some((j, k))
                })
                .collect()
        })
        .collect();
    Ok(GramMatrix::from_rows(n, rows))
}
