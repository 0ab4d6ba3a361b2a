//! Regularized weighted non-negative matrix factorization.
//!
//! Minimizes
//!
//! ```text
//! J(U, V) = |W o (R - U V^T)|_F^2
//!         + lambda/2 sum_ij |u_i - u_j|^2 K^U_ij
//!         + mu/2     sum_ij |v_i - v_j|^2 K^V_ij
//! ```
//!
//! over non-negative `U` (locations x rank) and `V` (activities x rank). The
//! graph terms equal `lambda tr(U^T L_U U)` and `mu tr(V^T L_V V)` with
//! `L = Diag(deg) - K`. Multiplicative updates keep the factors non-negative
//! and never increase `J`. Because the data term weighs each residual by
//! `W_ij^2`, the updates use the squared weights.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scene::{GlobalIndex, SceneGrid};
use crate::side_info::GramMatrix;

/// Observed matrix `R`, weights `W` and the observed-entry mask.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionMatrixBundle {
    r: Array2<f64>,
    w: Array2<f64>,
    mask: Array2<bool>,
    w2: Array2<f64>,
    w2r: Array2<f64>,
}

impl ActionMatrixBundle {
    /// Entries of `r` with zero weight are reset to 0.
    pub fn new(mut r: Array2<f64>, w: Array2<f64>) -> Result<Self> {
        if r.dim() != w.dim() {
            return Err(Error::ShapeMismatch(format!("R is {:?} but W is {:?}", r.dim(), w.dim())));
        }
        for (&rv, &wv) in r.iter().zip(w.iter()) {
            if !(rv >= 0.0) || !rv.is_finite() {
                return Err(Error::invalid(rv, "R entries must be finite and >= 0"));
            }
            if !(wv >= 0.0) || !wv.is_finite() {
                return Err(Error::invalid(wv, "W entries must be finite and >= 0"));
            }
        }
        let mask = w.mapv(|x| x > 0.0);
        Zip::from(&mut r).and(&mask).for_each(|rv, &m| {
            if !m {
                *rv = 0.0;
            }
        });
        let w2 = &w * &w;
        let w2r = &w2 * &r;
        Ok(ActionMatrixBundle { r, w, mask, w2, w2r })
    }

    pub fn r(&self) -> &Array2<f64> {
        &self.r
    }

    pub fn w(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    pub fn num_rows(&self) -> usize {
        self.r.nrows()
    }

    pub fn num_cols(&self) -> usize {
        self.r.ncols()
    }

    /// Same data with every weight multiplied by `c`.
    pub fn with_scaled_weights(&self, c: f64) -> Result<Self> {
        ActionMatrixBundle::new(self.r.clone(), &self.w * c)
    }
}

/// Builds `R` and the class-balancing weights `W` over the stacked scenes.
///
/// A demonstrated entry of activity `c` gets weight `1 / n_c`, where `n_c` is
/// the number of demonstrated entries of `c`. Every entry of an explored
/// cell without demonstrations is an observed zero with weight `1 / n_z`,
/// `n_z` being the number of such entries. All other entries (unexplored
/// cells, and other activities at demonstrated cells) get weight 0.
pub fn build_weight_matrix(scenes: &[&SceneGrid], index: &GlobalIndex) -> Result<ActionMatrixBundle> {
    build_weight_matrix_with(scenes, index, &vec![true; scenes.len()])
}

/// Like [`build_weight_matrix`], but scenes flagged `false` in
/// `activity_observed` contribute no observations at all (novel scenes).
pub fn build_weight_matrix_with(
    scenes: &[&SceneGrid],
    index: &GlobalIndex,
    activity_observed: &[bool],
) -> Result<ActionMatrixBundle> {
    if scenes.len() != index.num_scenes() || activity_observed.len() != scenes.len() {
        return Err(Error::LengthMismatch {
            expected: index.num_scenes(),
            found: scenes.len().min(activity_observed.len()),
        });
    }
    let a = scenes.first().map_or(0, |s| s.num_activities());
    let m = index.len();
    let mut r = Array2::<f64>::zeros((m, a));
    let mut observed = Array2::from_elem((m, a), false);
    let mut empty = vec![false; m];
    let mut per_class = vec![0usize; a];
    let mut n_empty = 0usize;

    for (s, scene) in scenes.iter().enumerate() {
        if scene.scene_id() != index.scene_ids()[s] || scene.num_cells() != index.scene_rows(s).len() {
            return Err(Error::ShapeMismatch(format!(
                "scene {} does not match index entry {}",
                scene.scene_id(),
                index.scene_ids()[s]
            )));
        }
        if !activity_observed[s] {
            continue;
        }
        for d in scene.demonstrations() {
            let row = index.row(s, d.cell).expect("demonstration cell inside scene");
            r[[row, d.activity]] = d.value;
            observed[[row, d.activity]] = true;
            per_class[d.activity] += 1;
        }
        for cell in scene.cells() {
            if scene.is_explored(cell) && !scene.has_demonstration_at(cell) {
                let row = index.row(s, cell).expect("cell inside scene");
                empty[row] = true;
                n_empty += a;
            }
        }
    }

    let mut w = Array2::<f64>::zeros((m, a));
    for row in 0..m {
        for c in 0..a {
            if observed[[row, c]] {
                w[[row, c]] = 1.0 / per_class[c] as f64;
            } else if empty[row] {
                w[[row, c]] = 1.0 / n_empty as f64;
            }
        }
    }
    ActionMatrixBundle::new(r, w)
}

/// Non-negative factors whose product `U V^T` is the predicted action map.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

impl FactorPair {
    pub fn new(u: Array2<f64>, v: Array2<f64>) -> Result<Self> {
        if u.ncols() != v.ncols() || u.ncols() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "U is {:?} and V is {:?}; ranks must agree and be >= 1",
                u.dim(),
                v.dim()
            )));
        }
        if let Some(&bad) = u.iter().chain(v.iter()).find(|&&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid(bad, "factor entries must be finite and >= 0"));
        }
        Ok(FactorPair { u, v })
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// Random strictly positive factors with entries in `[0.1, 1.1)`,
    /// drawing `U` row-major first and then `V`.
    pub fn random(rows: usize, cols: usize, rank: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Array2::from_shape_simple_fn((rows, rank), || rng.random_range(0.1..1.1));
        let v = Array2::from_shape_simple_fn((cols, rank), || rng.random_range(0.1..1.1));
        FactorPair { u, v }
    }

    /// Factors with every entry rounded to the 9-significant-digit grid of
    /// the checkpoint format.
    pub fn quantized(&self) -> FactorPair {
        FactorPair {
            u: self.u.mapv(crate::numfmt::quantize9),
            v: self.v.mapv(crate::numfmt::quantize9),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    pub rank: usize,
    pub lambda: f64,
    pub mu: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub epsilon_stab: f64,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            rank: 6,
            lambda: 1e-2,
            mu: 0.0,
            max_iters: 2000,
            rel_tol: 1e-6,
            epsilon_stab: 1e-12,
            seed: 0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidParameter("rank must be >= 1".into()));
        }
        if !(self.lambda >= 0.0) || !(self.mu >= 0.0) {
            return Err(Error::InvalidParameter("lambda and mu must be >= 0".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("rel_tol must be > 0".into()));
        }
        if !(self.epsilon_stab >= 0.0) {
            return Err(Error::InvalidParameter("epsilon_stab must be >= 0".into()));
        }
        Ok(())
    }
}

fn check_shapes(
    u: &ArrayView2<f64>,
    v: &ArrayView2<f64>,
    bundle: &ActionMatrixBundle,
    k_u: &GramMatrix,
    k_v: Option<&GramMatrix>,
) -> Result<()> {
    let (m, a) = bundle.r.dim();
    if u.nrows() != m || v.nrows() != a || u.ncols() != v.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "U {:?}, V {:?} incompatible with R {:?}",
            u.dim(),
            v.dim(),
            (m, a)
        )));
    }
    if k_u.len() != m {
        return Err(Error::ShapeMismatch(format!("K^U has {} rows, R has {m}", k_u.len())));
    }
    if let Some(k_v) = k_v {
        if k_v.len() != a {
            return Err(Error::ShapeMismatch(format!("K^V has {} rows, R has {a} columns", k_v.len())));
        }
    }
    Ok(())
}

/// `sum_i deg_i |x_i|^2 - sum_i <x_i, (K x)_i>`, given `kx = K x`.
fn laplacian_form(x: &ArrayView2<f64>, kx: &Array2<f64>, degree: &Array1<f64>) -> f64 {
    let mut acc = 0.0;
    for ((row, krow), &d) in x.outer_iter().zip(kx.outer_iter()).zip(degree.iter()) {
        let mut sq = 0.0;
        let mut cross = 0.0;
        for (&xi, &ki) in row.iter().zip(krow.iter()) {
            sq += xi * xi;
            cross += xi * ki;
        }
        acc += d * sq - cross;
    }
    acc
}

/// `tr(X^T (Diag(deg) - K) X)`, which equals
/// `1/2 sum_ij |x_i - x_j|^2 K_ij` for symmetric `K`.
pub fn laplacian_regularizer(x: &ArrayView2<f64>, k: &GramMatrix) -> f64 {
    let kx = k.apply(x);
    laplacian_form(x, &kx, k.degree())
}

fn data_term(u: &ArrayView2<f64>, v: &ArrayView2<f64>, bundle: &ActionMatrixBundle) -> f64 {
    let uvt = u.dot(&v.t());
    let mut acc = 0.0;
    Zip::from(&uvt)
        .and(&bundle.r)
        .and(&bundle.w)
        .for_each(|&p, &r, &w| {
            let e = w * (r - p);
            acc += e * e;
        });
    acc
}

/// Evaluates `J(U, V)`. `k_v = None` stands for the identity, whose
/// regularization term is exactly zero.
pub fn objective(
    u: &ArrayView2<f64>,
    v: &ArrayView2<f64>,
    bundle: &ActionMatrixBundle,
    k_u: &GramMatrix,
    k_v: Option<&GramMatrix>,
    lambda: f64,
    mu: f64,
) -> Result<f64> {
    check_shapes(u, v, bundle, k_u, k_v)?;
    if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("objective factors"));
    }
    let mut j = data_term(u, v, bundle);
    if lambda != 0.0 {
        j += lambda * laplacian_regularizer(u, k_u);
    }
    if mu != 0.0 {
        if let Some(k_v) = k_v {
            j += mu * laplacian_regularizer(v, k_v);
        }
    }
    Ok(j)
}

/// Multiplicative update of `x` given numerator and denominator parts.
fn scale_update(x: &Array2<f64>, num: &Array2<f64>, den: &Array2<f64>, eps: f64) -> Array2<f64> {
    let mut out = x.clone();
    Zip::from(&mut out).and(num).and(den).for_each(|o, &n, &d| {
        *o *= n / (d + eps);
    });
    out
}

fn update_u(
    u: &Array2<f64>,
    v: &Array2<f64>,
    bundle: &ActionMatrixBundle,
    k_u: &GramMatrix,
    ku: Option<&Array2<f64>>,
    lambda: f64,
    eps: f64,
) -> Array2<f64> {
    let uvt = u.dot(&v.t());
    let mut num = bundle.w2r.dot(v);
    let mut den = (&bundle.w2 * &uvt).dot(v);
    if lambda != 0.0 {
        let ku = ku.expect("K^U U is required when lambda > 0");
        num.scaled_add(lambda, ku);
        let deg = k_u.degree().view().insert_axis(Axis(1));
        den += &(&(u * &deg) * lambda);
    }
    scale_update(u, &num, &den, eps)
}

fn update_v(
    u: &Array2<f64>,
    v: &Array2<f64>,
    bundle: &ActionMatrixBundle,
    k_v: Option<&GramMatrix>,
    mu: f64,
    eps: f64,
) -> Array2<f64> {
    let uvt = u.dot(&v.t());
    let mut num = bundle.w2r.t().dot(u);
    let mut den = (&bundle.w2 * &uvt).t().dot(u);
    if mu != 0.0 {
        match k_v {
            Some(k_v) => {
                num.scaled_add(mu, &k_v.apply(&v.view()));
                let deg = k_v.degree().view().insert_axis(Axis(1));
                den += &(&(v * &deg) * mu);
            }
            None => {
                num.scaled_add(mu, v);
                den.scaled_add(mu, v);
            }
        }
    }
    scale_update(v, &num, &den, eps)
}

/// One sweep of the regularized multiplicative updates: `U` first, then `V`
/// using the new `U`.
pub fn multiplicative_step(
    u: &Array2<f64>,
    v: &Array2<f64>,
    bundle: &ActionMatrixBundle,
    k_u: &GramMatrix,
    k_v: Option<&GramMatrix>,
    params: &SolverParams,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_shapes(&u.view(), &v.view(), bundle, k_u, k_v)?;
    let ku = (params.lambda != 0.0).then(|| k_u.apply(&u.view()));
    let u_next = update_u(u, v, bundle, k_u, ku.as_ref(), params.lambda, params.epsilon_stab);
    let v_next = update_v(&u_next, v, bundle, k_v, params.mu, params.epsilon_stab);
    if u_next.iter().chain(v_next.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("multiplicative update"));
    }
    Ok((u_next, v_next))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub factors: FactorPair,
    /// Objective before the first step and after every step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs multiplicative updates from a seeded random start until the
/// relative decrease of `J` drops below `rel_tol` or `max_iters` is hit.
pub fn fit(
    bundle: &ActionMatrixBundle,
    k_u: &GramMatrix,
    k_v: Option<&GramMatrix>,
    params: &SolverParams,
) -> Result<FitResult> {
    params.validate()?;
    let (m, a) = bundle.r.dim();
    let start = FactorPair::random(m, a, params.rank, params.seed);
    fit_from(bundle, k_u, k_v, params, start)
}

/// [`fit`] from explicit starting factors.
pub fn fit_from(
    bundle: &ActionMatrixBundle,
    k_u: &GramMatrix,
    k_v: Option<&GramMatrix>,
    params: &SolverParams,
    start: FactorPair,
) -> Result<FitResult> {
    params.validate()?;
    let FactorPair { mut u, mut v } = start;
    check_shapes(&u.view(), &v.view(), bundle, k_u, k_v)?;
    let lambda = params.lambda;
    let eps = params.epsilon_stab;

    // K^U U is shared between the objective and the next U update.
    let mut ku = (lambda != 0.0).then(|| k_u.apply(&u.view()));
    let eval = |u: &Array2<f64>, v: &Array2<f64>, ku: Option<&Array2<f64>>| -> f64 {
        let mut j = data_term(&u.view(), &v.view(), bundle);
        if let Some(ku) = ku {
            j += lambda * laplacian_form(&u.view(), ku, k_u.degree());
        }
        if params.mu != 0.0 {
            if let Some(k_v) = k_v {
                j += params.mu * laplacian_regularizer(&v.view(), k_v);
            }
        }
        j
    };

    let mut j = eval(&u, &v, ku.as_ref());
    let mut trace = vec![j];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iters {
        u = update_u(&u, &v, bundle, k_u, ku.as_ref(), lambda, eps);
        if lambda != 0.0 {
            ku = Some(k_u.apply(&u.view()));
        }
        v = update_v(&u, &v, bundle, k_v, params.mu, eps);
        iterations += 1;
        let j_next = eval(&u, &v, ku.as_ref());
        if !j_next.is_finite() {
            return Err(Error::NonFinite("objective during fit"));
        }
        trace.push(j_next);
        let decrease = (j - j_next) / j.abs().max(f64::MIN_POSITIVE);
        j = j_next;
        if j == 0.0 || decrease < params.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(FitResult {
        factors: FactorPair { u, v },
        trace,
        iterations,
        converged,
    })
}

/// Predicted location-by-activity scores.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionMap {
    values: Array2<f64>,
}

impl ActionMap {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|&&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid(bad, "action map entries must be finite and >= 0"));
        }
        Ok(ActionMap { values })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn num_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_activities(&self) -> usize {
        self.values.ncols()
    }

    /// Each activity column divided by its maximum; all-zero columns stay zero.
    pub fn normalized(&self) -> ActionMap {
        let mut values = self.values.clone();
        for mut col in values.axis_iter_mut(Axis(1)) {
            let max = col.fold(0.0f64, |m, &x| m.max(x));
            if max > 0.0 {
                col.mapv_inplace(|x| x / max);
            }
        }
        ActionMap { values }
    }

    /// Rows `range` as a separate map.
    pub fn rows(&self, range: std::ops::Range<usize>) -> ActionMap {
        ActionMap {
            values: self.values.slice(ndarray::s![range, ..]).to_owned(),
        }
    }

    /// Copy with every entry on the 9-significant-digit file grid.
    pub fn quantized(&self) -> ActionMap {
        ActionMap {
            values: self.values.mapv(crate::numfmt::quantize9),
        }
    }
}

/// `R_hat = U V^T`.
pub fn predict(factors: &FactorPair) -> ActionMap {
    ActionMap {
        values: factors.u.dot(&factors.v.t()).mapv(|x| x.max(0.0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{ActivityVocabulary, Cell, Demonstration};
    use ndarray::array;

    fn vocab3() -> ActivityVocabulary {
        ActivityVocabulary::new(["sit", "type", "wash"]).unwrap()
    }

    #[test]
    fn weights_balance_classes() {
        let mut g = SceneGrid::new("s", 4, 2, 0.25, vocab3()).unwrap();
        g.add_demonstration(Demonstration::labelled(Cell::new(0, 0), 0)).unwrap();
        g.add_demonstration(Demonstration::labelled(Cell::new(1, 0), 0)).unwrap();
        g.add_demonstration(Demonstration { cell: Cell::new(2, 0), activity: 1, value: 0.7 }).unwrap();
        g.mark_explored(Cell::new(0, 1)).unwrap();
        let idx = crate::scene::stack_scenes([&g]).unwrap();
        let b = build_weight_matrix(&[&g], &idx).unwrap();
        let w = b.w();
        assert_eq!(w[[0, 0]], 0.5);
        assert_eq!(w[[1, 0]], 0.5);
        assert_eq!(w[[2, 1]], 1.0);
        assert_eq!(b.r()[[2, 1]], 0.7);
        // one explored empty cell => 3 observed-empty entries
        for c in 0..3 {
            assert_eq!(w[[4, c]], 1.0 / 3.0);
        }
        // other activities at demonstrated cells, and unexplored cells
        assert_eq!(w[[0, 1]], 0.0);
        assert_eq!(w[[3, 0]], 0.0);
        assert_eq!(w.row(7).sum(), 0.0);
    }

    #[test]
    fn weights_without_demonstrations() {
        let mut g = SceneGrid::new("s", 3, 1, 0.25, vocab3()).unwrap();
        g.mark_explored(Cell::new(0, 0)).unwrap();
        g.mark_explored(Cell::new(2, 0)).unwrap();
        let idx = crate::scene::stack_scenes([&g]).unwrap();
        let b = build_weight_matrix(&[&g], &idx).unwrap();
        assert!(b.w().row(0).iter().all(|&x| x == 1.0 / 6.0));
        assert!(b.w().row(1).iter().all(|&x| x == 0.0));
        assert!(b.r().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unexplored_scene_has_zero_weights() {
        let g = SceneGrid::new("s", 3, 3, 0.25, vocab3()).unwrap();
        let idx = crate::scene::stack_scenes([&g]).unwrap();
        let b = build_weight_matrix(&[&g], &idx).unwrap();
        assert!(b.w().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unobserved_scenes_contribute_nothing() {
        let mut a = SceneGrid::new("a", 2, 1, 0.25, vocab3()).unwrap();
        a.add_demonstration(Demonstration::labelled(Cell::new(0, 0), 2)).unwrap();
        let mut b = SceneGrid::new("b", 2, 1, 0.25, vocab3()).unwrap();
        b.add_demonstration(Demonstration::labelled(Cell::new(1, 0), 2)).unwrap();
        let idx = crate::scene::stack_scenes([&a, &b]).unwrap();
        let bundle = build_weight_matrix_with(&[&a, &b], &idx, &[true, false]).unwrap();
        assert_eq!(bundle.w()[[0, 2]], 1.0);
        assert!(bundle.w().slice(ndarray::s![2.., ..]).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn bundle_zeroes_unweighted_entries() {
        let b = ActionMatrixBundle::new(array![[1.0, 2.0]], array![[1.0, 0.0]]).unwrap();
        assert_eq!(b.r(), &array![[1.0, 0.0]]);
        assert_eq!(b.mask(), &array![[true, false]]);
        assert!(ActionMatrixBundle::new(array![[1.0]], array![[1.0, 0.0]]).is_err());
        assert!(ActionMatrixBundle::new(array![[-1.0]], array![[1.0]]).is_err());
    }

    #[test]
    fn objective_at_zero_factors() {
        let r = array![[1.0, 0.5], [0.0, 2.0]];
        let w = array![[0.5, 1.0], [1.0, 0.25]];
        let b = ActionMatrixBundle::new(r.clone(), w.clone()).unwrap();
        let k = GramMatrix::identity(2);
        let u = Array2::zeros((2, 1));
        let v = Array2::zeros((2, 1));
        let j = objective(&u.view(), &v.view(), &b, &k, None, 0.0, 0.0).unwrap();
        let expected = (&w * &r).mapv(|x| x * x).sum();
        assert_eq!(j, expected);
    }

    #[test]
    fn objective_of_exact_factorization_is_zero() {
        let u = array![[1.0, 0.0], [0.5, 2.0], [0.0, 1.0]];
        let v = array![[1.0, 1.0], [0.0, 3.0]];
        let r = u.dot(&v.t());
        let b = ActionMatrixBundle::new(r, Array2::ones((3, 2))).unwrap();
        let j = objective(&u.view(), &v.view(), &b, &GramMatrix::identity(3), None, 0.0, 0.0).unwrap();
        assert_eq!(j, 0.0);
    }

    #[test]
    fn objective_rejects_bad_shapes() {
        let b = ActionMatrixBundle::new(Array2::ones((3, 2)), Array2::ones((3, 2))).unwrap();
        let u = Array2::ones((3, 1));
        let v = Array2::ones((2, 1));
        assert!(objective(&u.view(), &v.view(), &b, &GramMatrix::identity(2), None, 1.0, 0.0).is_err());
        let bad_v = Array2::ones((3, 1));
        assert!(objective(&u.view(), &bad_v.view(), &b, &GramMatrix::identity(3), None, 1.0, 0.0).is_err());
        let nan_u = Array2::from_elem((3, 1), f64::NAN);
        assert!(matches!(
            objective(&nan_u.view(), &v.view(), &b, &GramMatrix::identity(3), None, 1.0, 0.0),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn identity_column_similarity_costs_nothing() {
        let b = ActionMatrixBundle::new(Array2::ones((3, 2)), Array2::ones((3, 2))).unwrap();
        let f = FactorPair::random(3, 2, 2, 5);
        let k = GramMatrix::identity(3);
        let none = objective(&f.u.view(), &f.v.view(), &b, &k, None, 0.1, 3.0).unwrap();
        let zero_mu = objective(&f.u.view(), &f.v.view(), &b, &k, Some(&GramMatrix::identity(2)), 0.1, 0.0).unwrap();
        assert_eq!(none, zero_mu);
    }

    #[test]
    fn random_init_is_seeded_and_in_range() {
        let a = FactorPair::random(5, 3, 2, 42);
        let b = FactorPair::random(5, 3, 2, 42);
        assert_eq!(a, b);
        assert!(a.u.iter().chain(a.v.iter()).all(|&x| (0.1..1.1).contains(&x)));
        assert_ne!(a, FactorPair::random(5, 3, 2, 43));
    }

    #[test]
    fn predict_and_normalize() {
        let f = FactorPair::new(array![[1.0], [2.0]], array![[3.0]]).unwrap();
        let am = predict(&f);
        assert_eq!(am.values(), &array![[3.0], [6.0]]);
        assert_eq!(am.normalized().values(), &array![[0.5], [1.0]]);
        let zero = ActionMap::new(array![[0.0, 2.0], [0.0, 1.0]]).unwrap().normalized();
        assert_eq!(zero.values(), &array![[0.0, 1.0], [0.0, 0.5]]);
    }

    #[test]
    fn fit_is_seed_deterministic() {
        let b = ActionMatrixBundle::new(
            Array2::from_shape_fn((6, 3), |(i, j)| ((i + j) % 3) as f64),
            Array2::ones((6, 3)),
        )
        .unwrap();
        let k = GramMatrix::identity(6);
        let p = SolverParams { rank: 2, lambda: 0.01, max_iters: 50, seed: 9, ..SolverParams::default() };
        let a = fit(&b, &k, None, &p).unwrap();
        let c = fit(&b, &k, None, &p).unwrap();
        assert_eq!(a.trace, c.trace);
        assert_eq!(a.factors, c.factors);
        assert_eq!(a.trace.len(), a.iterations + 1);
    }

    #[test]
    fn params_validation() {
        assert!(SolverParams { rank: 0, ..SolverParams::default() }.validate().is_err());
        assert!(SolverParams { lambda: -1.0, ..SolverParams::default() }.validate().is_err());
        assert!(SolverParams { rel_tol: 0.0, ..SolverParams::default() }.validate().is_err());
    }
}
