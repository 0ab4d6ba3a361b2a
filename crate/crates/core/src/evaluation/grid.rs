//! Parameter sweeps: one fit and evaluation per `(variant, alpha, lambda,
//! gamma)` tuple, summarized by cross-run maximum, mean and deviation.

use std::collections::HashMap;

use rayon::prelude::*;

use super::Summary;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::experiments::{run_full, RunSettings};
use crate::side_info::KernelVariant;

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            alphas: vec![0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0],
            lambdas: vec![1e-3, 1e-2],
            gammas: vec![100.0, 1000.0],
        }
    }
}

impl GridSpec {
    /// A grid holding exactly one tuple.
    pub fn single(alpha: f64, lambda: f64, gamma: f64) -> Self {
        GridSpec {
            alphas: vec![alpha],
            lambdas: vec![lambda],
            gammas: vec![gamma],
        }
    }

    /// `(alpha, lambda, gamma)` with alpha outermost and gamma innermost.
    pub fn tuples(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.alphas.len() * self.lambdas.len() * self.gammas.len());
        for &a in &self.alphas {
            for &l in &self.lambdas {
                for &g in &self.gammas {
                    out.push((a, l, g));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridRun {
    pub variant: KernelVariant,
    pub alpha: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// Mean over the evaluated scenes, or the failure message.
    pub outcome: std::result::Result<GridOutcome, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridOutcome {
    pub summary: Summary,
    pub per_scene: Vec<Summary>,
    pub iterations: usize,
}

/// Cross-run statistic of one summary metric.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct CrossRunStat {
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariantSummary {
    pub variant: KernelVariant,
    pub completed: usize,
    pub failed: usize,
    /// In [`Summary::COLUMNS`] order.
    pub metrics: [CrossRunStat; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridReport {
    pub scene_ids: Vec<String>,
    pub runs: Vec<GridRun>,
    pub variants: Vec<VariantSummary>,
}

/// Runs that would produce the same kernel share one fit: only the weights
/// a variant actually uses and the bandwidths of active terms matter.
fn fit_key(s: &RunSettings) -> [u64; 6] {
    let (ws, wp, wo) = s.kernel.variant.weights(s.kernel.alpha);
    let gp = if wp > 0.0 { s.kernel.gamma_p } else { 0.0 };
    let go = if wo > 0.0 { s.kernel.gamma_o } else { 0.0 };
    [ws, wp, wo, gp, go, s.solver.lambda].map(f64::to_bits)
}

fn cross_run(values: &[f64]) -> CrossRunStat {
    if values.is_empty() {
        return CrossRunStat::default();
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    CrossRunStat {
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
        std: var.sqrt(),
    }
}

/// Sweeps `spec` for every variant over the scenes in `selection`, all with
/// their demonstrations. Every run starts from `base` (and its seed) with
/// `alpha`, `lambda` and both chi-squared bandwidths replaced. A failing
/// run is recorded and the sweep continues.
pub fn run_parameter_grid(
    dataset: &Dataset,
    selection: &[usize],
    spec: &GridSpec,
    variants: &[KernelVariant],
    base: &RunSettings,
) -> Result<GridReport> {
    let tuples = spec.tuples();
    if tuples.is_empty() || variants.is_empty() {
        return Err(Error::Empty("parameter grid has no runs"));
    }
    let mut planned = Vec::with_capacity(tuples.len() * variants.len());
    for &variant in variants {
        for &(alpha, lambda, gamma) in &tuples {
            let mut s = base.with_variant(variant);
            s.kernel.alpha = alpha;
            s.kernel.gamma_p = gamma;
            s.kernel.gamma_o = gamma;
            s.solver.lambda = lambda;
            planned.push((variant, alpha, lambda, gamma, s));
        }
    }
    let mut unique: Vec<([u64; 6], RunSettings)> = Vec::new();
    for (.., s) in &planned {
        let key = fit_key(s);
        if !unique.iter().any(|(k, _)| *k == key) {
            unique.push((key, *s));
        }
    }
    let results: HashMap<[u64; 6], std::result::Result<GridOutcome, String>> = unique
        .par_iter()
        .map(|(key, s)| {
            let outcome = run_full(dataset, selection, s)
                .map(|r| GridOutcome {
                    summary: r.summary,
                    per_scene: r.scenes.iter().map(|e| e.summary).collect(),
                    iterations: r.fit.iterations,
                })
                .map_err(|e| e.to_string());
            (*key, outcome)
        })
        .collect();
    let runs: Vec<GridRun> = planned
        .into_iter()
        .map(|(variant, alpha, lambda, gamma, s)| GridRun {
            variant,
            alpha,
            lambda,
            gamma,
            outcome: results[&fit_key(&s)].clone(),
        })
        .collect();
    let variants = variants
        .iter()
        .map(|&v| {
            let done: Vec<&GridOutcome> = runs
                .iter()
                .filter(|r| r.variant == v)
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            let failed = runs.iter().filter(|r| r.variant == v && r.outcome.is_err()).count();
            let metrics = std::array::from_fn(|m| {
                let vals: Vec<f64> = done.iter().map(|o| o.summary.as_array()[m]).collect();
                cross_run(&vals)
            });
            VariantSummary { variant: v, completed: done.len(), failed, metrics }
        })
        .collect();
    Ok(GridReport {
        scene_ids: selection.iter().map(|&s| dataset.scenes[s].id().to_string()).collect(),
        runs,
        variants,
    })
}
