//! End-to-end pipelines over a [`Dataset`]: stacking scenes into one
//! matrix, fitting, predicting and scoring, plus the transfer, elapse and
//! joint-versus-single regimes.
//!
//! Factors and action maps pass through the 9-significant-digit file grid
//! before use, so a pipeline run in memory and one chained through files
//! produce the same numbers.

use rayon::prelude::*;

use crate::baselines::{augmented_wnmf, detection_action_map};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_scene, EvalConfig, SceneEvaluation, Summary};
use crate::rwnmf::{build_weight_matrix_with, fit, predict, ActionMap, ActionMatrixBundle, FactorPair, FitResult, SolverParams};
use crate::scene::{stack_scenes, GlobalIndex, SceneGrid};
use crate::side_info::{build_gram_matrix, GramOptions, KernelConfig, KernelVariant, LocationFeatures};
use crate::synthetic::sample_demonstrations;

/// Every knob of one fit-and-evaluate run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSettings {
    pub kernel: KernelConfig,
    pub solver: SolverParams,
    pub eval: EvalConfig,
    pub gram: GramOptions,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            kernel: KernelConfig {
                gamma_p: 100.0,
                gamma_o: 100.0,
                ..KernelConfig::default()
            },
            // Entry weights are 1/n_c and enter the data term squared, so
            // the data term sits near 1e-4 per activity; a larger lambda
            // lets the smoothness term flatten every column.
            solver: SolverParams {
                lambda: 1e-6,
                ..SolverParams::default()
            },
            eval: EvalConfig::default(),
            gram: GramOptions::default(),
        }
    }
}

impl RunSettings {
    pub fn with_variant(mut self, variant: KernelVariant) -> Self {
        self.kernel.variant = variant;
        self
    }
}

/// Selected scenes stacked into one weighted matrix.
#[derive(Clone, Debug)]
pub struct Problem {
    /// Dataset positions of the stacked scenes, in row order.
    pub selection: Vec<usize>,
    pub index: GlobalIndex,
    pub bundle: ActionMatrixBundle,
    pub locations: Vec<LocationFeatures>,
}

impl Problem {
    /// Stacks `selection`; scenes flagged `false` in `observed` contribute no
    /// activity observations.
    pub fn build(dataset: &Dataset, selection: &[usize], observed: &[bool]) -> Result<Problem> {
        let grids: Vec<&SceneGrid> = selection.iter().map(|&s| &dataset.scenes[s].grid).collect();
        Problem::from_grids(dataset, selection, &grids, observed)
    }

    /// Like [`Problem::build`] with replacement grids (e.g. with fewer
    /// demonstrations) standing in for the dataset's.
    pub fn from_grids(dataset: &Dataset, selection: &[usize], grids: &[&SceneGrid], observed: &[bool]) -> Result<Problem> {
        if selection.is_empty() {
            return Err(Error::Empty("no scenes selected"));
        }
        if let Some(&bad) = selection.iter().find(|&&s| s >= dataset.scenes.len()) {
            return Err(Error::InvalidParameter(format!("scene position {bad} out of range")));
        }
        let index = stack_scenes(grids.iter().copied())?;
        let bundle = build_weight_matrix_with(grids, &index, observed)?;
        Ok(Problem {
            selection: selection.to_vec(),
            index,
            bundle,
            locations: dataset.stacked_locations(selection),
        })
    }

    /// Rows of the `k`-th stacked scene.
    pub fn rows(&self, k: usize) -> std::ops::Range<usize> {
        self.index.scene_rows(k)
    }

    /// Explored flag of every row.
    pub fn explored_rows(&self, dataset: &Dataset) -> Vec<bool> {
        self.selection
            .iter()
            .flat_map(|&s| dataset.scenes[s].grid.explored_mask().iter().copied())
            .collect()
    }

    pub fn fit(&self, settings: &RunSettings) -> Result<FitResult> {
        let k = build_gram_matrix(&self.locations, &settings.kernel, &settings.gram)?;
        fit(&self.bundle, &k, None, &settings.solver)
    }
}

/// `U V^T` from factors on the file grid, itself put on the file grid.
pub fn action_map_from_factors(factors: &FactorPair) -> ActionMap {
    predict(&factors.quantized()).quantized()
}

/// Scores the rows of stacked scene `k` against its dataset scene.
pub fn evaluate_stacked(dataset: &Dataset, problem: &Problem, am: &ActionMap, k: usize, eval: &EvalConfig) -> Result<SceneEvaluation> {
    let scene = &dataset.scenes[problem.selection[k]];
    evaluate_scene(&am.rows(problem.rows(k)), &scene.grid, &scene.poses, eval)
}

/// Column-wise mean of scene summaries.
pub fn mean_summary<'a>(evals: impl IntoIterator<Item = &'a SceneEvaluation>) -> Summary {
    let mut acc = [0.0; 4];
    let mut n = 0usize;
    for e in evals {
        for (a, v) in acc.iter_mut().zip(e.summary.as_array()) {
            *a += v;
        }
        n += 1;
    }
    if n > 0 {
        acc.iter_mut().for_each(|a| *a /= n as f64);
    }
    Summary::from_array(acc)
}

/// Fit, predict and evaluate of one setting on the selected scenes, all
/// of them observed.
#[derive(Clone, Debug)]
pub struct FullRun {
    pub fit: FitResult,
    pub action_map: ActionMap,
    pub scenes: Vec<SceneEvaluation>,
    pub summary: Summary,
}

pub fn run_full(dataset: &Dataset, selection: &[usize], settings: &RunSettings) -> Result<FullRun> {
    let problem = Problem::build(dataset, selection, &vec![true; selection.len()])?;
    let fit = problem.fit(settings)?;
    let action_map = action_map_from_factors(&fit.factors);
    let scenes = (0..selection.len())
        .map(|k| evaluate_stacked(dataset, &problem, &action_map, k, &settings.eval))
        .collect::<Result<Vec<_>>>()?;
    let summary = mean_summary(&scenes);
    Ok(FullRun { fit, action_map, scenes, summary })
}

/// One method's scores on the target scenes of a transfer task.
#[derive(Clone, Debug)]
pub struct MethodRow {
    pub method: String,
    pub scenes: Vec<SceneEvaluation>,
    pub summary: Summary,
}

/// Rows `Det.`, `NMF`, `SO`, `SP`, `SOP`, scored on the targets only.
#[derive(Clone, Debug)]
pub struct TransferReport {
    pub sources: Vec<String>,
    pub targets: Vec<String>,
    pub rows: Vec<MethodRow>,
}

impl TransferReport {
    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Fits on source and target scenes together with no target activity
/// observations and scores the predictions on the targets. Baselines: the
/// detection map of each target and feature-augmented weighted NMF.
pub fn transfer(dataset: &Dataset, sources: &[usize], targets: &[usize], settings: &RunSettings) -> Result<TransferReport> {
    if sources.is_empty() || targets.is_empty() {
        return Err(Error::Empty("transfer needs source and target scenes"));
    }
    if let Some(t) = targets.iter().find(|t| sources.contains(t)) {
        return Err(Error::InvalidParameter(format!("scene {} is both source and target", dataset.scenes[*t].id())));
    }
    let selection: Vec<usize> = sources.iter().chain(targets).copied().collect();
    let observed: Vec<bool> = selection.iter().map(|s| sources.contains(s)).collect();
    let problem = Problem::build(dataset, &selection, &observed)?;
    let target_slots: Vec<usize> = (sources.len()..selection.len()).collect();
    let score = |am: &ActionMap| -> Result<Vec<SceneEvaluation>> {
        target_slots
            .iter()
            .map(|&k| evaluate_stacked(dataset, &problem, am, k, &settings.eval))
            .collect()
    };
    let row = |method: &str, scenes: Vec<SceneEvaluation>| MethodRow {
        method: method.to_string(),
        summary: mean_summary(&scenes),
        scenes,
    };

    let mut rows = Vec::new();
    let det: Vec<SceneEvaluation> = targets
        .iter()
        .map(|&t| {
            let scene = &dataset.scenes[t];
            let am = detection_action_map(&scene.features.object_scores.view(), &dataset.category_map)?.quantized();
            evaluate_scene(&am, &scene.grid, &scene.poses, &settings.eval)
        })
        .collect::<Result<_>>()?;
    rows.push(row("Det.", det));

    let stacked_p = stack_features(dataset, &selection, |s| &s.features.scene_scores);
    let stacked_o = stack_features(dataset, &selection, |s| &s.features.object_scores);
    let nmf = augmented_wnmf(
        &problem.bundle,
        &stacked_p.view(),
        &stacked_o.view(),
        &problem.explored_rows(dataset),
        &settings.solver,
    )?;
    rows.push(row("NMF", score(&nmf.action_map.quantized())?));

    let variants: Vec<Result<MethodRow>> = KernelVariant::APPEARANCE
        .par_iter()
        .map(|&v| {
            let fit = problem.fit(&settings.with_variant(v))?;
            Ok(row(v.as_str(), score(&action_map_from_factors(&fit.factors))?))
        })
        .collect();
    for r in variants {
        rows.push(r?);
    }
    Ok(TransferReport {
        sources: sources.iter().map(|&s| dataset.scenes[s].id().to_string()).collect(),
        targets: targets.iter().map(|&s| dataset.scenes[s].id().to_string()).collect(),
        rows,
    })
}

fn stack_features(
    dataset: &Dataset,
    selection: &[usize],
    pick: impl Fn(&crate::dataset::SceneData) -> &ndarray::Array2<f64>,
) -> ndarray::Array2<f64> {
    let views: Vec<_> = selection.iter().map(|&s| pick(&dataset.scenes[s]).view()).collect();
    ndarray::concatenate(ndarray::Axis(0), &views).expect("feature tables share their width")
}

/// Scores after observing a fraction of the demonstrations.
#[derive(Clone, Debug)]
pub struct ElapsePoint {
    pub fraction: f64,
    pub demonstrations: usize,
    pub scenes: Vec<SceneEvaluation>,
    pub summary: Summary,
}

pub const DEFAULT_FRACTIONS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Joint fits on prefix-consistent demonstration subsets, one per
/// fraction; subsets are drawn per scene with `seed`.
pub fn elapse(dataset: &Dataset, selection: &[usize], fractions: &[f64], seed: u64, settings: &RunSettings) -> Result<Vec<ElapsePoint>> {
    if fractions.is_empty() {
        return Err(Error::Empty("no demonstration fractions"));
    }
    fractions
        .par_iter()
        .map(|&fraction| {
            let grids = selection
                .iter()
                .map(|&s| {
                    let grid = &dataset.scenes[s].grid;
                    let keep = sample_demonstrations(grid, fraction, seed)?;
                    grid.restrict_demonstrations(&keep)
                })
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&SceneGrid> = grids.iter().collect();
            let problem = Problem::from_grids(dataset, selection, &refs, &vec![true; selection.len()])?;
            let fit = problem.fit(settings)?;
            let am = action_map_from_factors(&fit.factors);
            let scenes = (0..selection.len())
                .map(|k| {
                    let scene = &dataset.scenes[selection[k]];
                    evaluate_scene(&am.rows(problem.rows(k)), &scene.grid, &scene.poses, &settings.eval)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ElapsePoint {
                fraction,
                demonstrations: grids.iter().map(|g| g.demonstrations().len()).sum(),
                summary: mean_summary(&scenes),
                scenes,
            })
        })
        .collect()
}

/// Per-scene scores of one joint fit and of one fit per scene.
#[derive(Clone, Debug)]
pub struct JointComparison {
    pub joint: Vec<SceneEvaluation>,
    pub single: Vec<SceneEvaluation>,
}

impl JointComparison {
    /// Mean weighted-mean-F1 gain of joint over single fitting.
    pub fn mean_gain(&self) -> f64 {
        mean_summary(&self.joint).weighted_mean_f1 - mean_summary(&self.single).weighted_mean_f1
    }
}

pub fn joint_vs_single(dataset: &Dataset, selection: &[usize], settings: &RunSettings) -> Result<JointComparison> {
    let joint = run_full(dataset, selection, settings)?.scenes;
    let single = selection
        .par_iter()
        .map(|&s| run_full(dataset, &[s], settings).map(|r| r.scenes.into_iter().next().expect("one scene")))
        .collect::<Result<Vec<_>>>()?;
    Ok(JointComparison { joint, single })
}
