//! TOML run configuration. Every key is optional; keys present in the file
//! override the matching command-line flags.
//!
//! ```toml
//! seed = 3
//!
//! [kernel]
//! variant = "SOP"
//! alpha = 0.5
//!
//! [solver]
//! lambda = 1e-6
//!
//! [grid]
//! alphas = [0.1, 0.5]
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::evaluation::GridSpec;
use crate::experiments::RunSettings;
use crate::io::read_text;
use crate::side_info::KernelVariant;

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub kernel: KernelSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub grid: GridSection,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub variant: Option<String>,
    pub alpha: Option<f64>,
    pub sigma_s: Option<f64>,
    pub gamma_p: Option<f64>,
    pub gamma_o: Option<f64>,
    pub sparsify_threshold: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub rank: Option<usize>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub max_iters: Option<usize>,
    pub rel_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub fov_deg: Option<f64>,
    pub range_cells: Option<f64>,
    pub thresholds: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub alphas: Option<Vec<f64>>,
    pub lambdas: Option<Vec<f64>>,
    pub gammas: Option<Vec<f64>>,
    pub variants: Option<Vec<String>>,
}

fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
    if let Some(v) = v {
        *slot = v.clone();
    }
}

impl RunConfig {
    pub fn parse(text: &str, path: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| {
            // toml reports byte spans; turn the start into a line number
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0);
            Error::Parse {
                path: path.to_string(),
                line,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        RunConfig::parse(&read_text(path)?, &path.display().to_string())
    }

    /// Overrides `settings` with the keys present here and validates the result.
    pub fn apply(&self, settings: &mut RunSettings) -> Result<()> {
        let k = &self.kernel;
        if let Some(v) = &k.variant {
            settings.kernel.variant = v.parse()?;
        }
        set(&mut settings.kernel.alpha, &k.alpha);
        set(&mut settings.kernel.sigma_s, &k.sigma_s);
        set(&mut settings.kernel.gamma_p, &k.gamma_p);
        set(&mut settings.kernel.gamma_o, &k.gamma_o);
        set(&mut settings.gram.threshold, &k.sparsify_threshold);
        let s = &self.solver;
        set(&mut settings.solver.rank, &s.rank);
        set(&mut settings.solver.lambda, &s.lambda);
        set(&mut settings.solver.mu, &s.mu);
        set(&mut settings.solver.max_iters, &s.max_iters);
        set(&mut settings.solver.rel_tol, &s.rel_tol);
        set(&mut settings.solver.seed, &self.seed);
        let e = &self.eval;
        set(&mut settings.eval.fov_deg, &e.fov_deg);
        set(&mut settings.eval.range_cells, &e.range_cells);
        set(&mut settings.eval.n_thresholds, &e.thresholds);
        settings.kernel.validate()?;
        settings.solver.validate()
    }

    pub fn apply_grid(&self, spec: &mut GridSpec, variants: &mut Vec<KernelVariant>) -> Result<()> {
        let g = &self.grid;
        set(&mut spec.alphas, &g.alphas);
        set(&mut spec.lambdas, &g.lambdas);
        set(&mut spec.gammas, &g.gammas);
        if let Some(v) = &g.variants {
            *variants = v.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        Ok(())
    }
}
