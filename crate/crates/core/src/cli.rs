//! The `action-maps` command line. Each subcommand reads text files, runs
//! one library pipeline and writes text files; nothing is read from the
//! environment and no input is modified.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate_scene, run_parameter_grid, GridSpec, SceneEvaluation};
use crate::experiments::{self, action_map_from_factors, mean_summary, Problem, RunSettings, DEFAULT_FRACTIONS};
use crate::io::{self, read_text, write_text};
use crate::localization::{discrepancy_curve, label_queries, Fusion, LocalizationQuery, QueryStep};
use crate::rwnmf::ActionMap;
use crate::scene::Cell;
use crate::side_info::KernelVariant;
use crate::synthetic::{generate_dataset, WorldSpec};

#[derive(Debug, Parser)]
#[command(name = "action-maps", version, about = "Complete sparse activity maps of indoor scenes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic dataset.
    Generate(GenerateArgs),
    /// Fit factors on the selected scenes; writes factors.txt and trace.tsv.
    Fit(FitArgs),
    /// Turn factors into an action map table.
    Predict(PredictArgs),
    /// Score an action map; writes report.tsv and per_activity.tsv.
    Evaluate(EvaluateArgs),
    /// Sweep the parameter grid; writes grid.tsv and grid_summary.tsv.
    Grid(GridArgs),
    /// Fit with demonstrations from source scenes only, score the targets.
    Transfer(TransferArgs),
    /// Refit on growing prefixes of the demonstrations.
    Elapse(ElapseArgs),
    /// K-best localization discrepancy of observed activities.
    Localize(LocalizeArgs),
    /// One greymap per scene and activity plus the normalized table.
    ExportHeatmap(HeatmapArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum World {
    Compact,
    OfficeA,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FusionArg {
    Independent,
    PreviousProduct,
}

/// Model and evaluation knobs; unset flags keep the library defaults and
/// keys in `--config` win over flags.
#[derive(Debug, Clone, Default, Args)]
pub struct SettingsArgs {
    /// TOML file overriding these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// S, SO, SP or SOP.
    #[arg(long)]
    pub variant: Option<KernelVariant>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Spatial bandwidth in cells.
    #[arg(long)]
    pub sigma_s: Option<f64>,
    #[arg(long)]
    pub gamma_p: Option<f64>,
    #[arg(long)]
    pub gamma_o: Option<f64>,
    #[arg(long)]
    pub sparsify_threshold: Option<f64>,
    #[arg(long)]
    pub rank: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    /// Camera field of view in degrees.
    #[arg(long)]
    pub fov: Option<f64>,
    /// View triangle side length in cells.
    #[arg(long)]
    pub range: Option<f64>,
    #[arg(long)]
    pub thresholds: Option<usize>,
}

impl SettingsArgs {
    pub fn config(&self) -> Result<RunConfig> {
        match &self.config {
            Some(p) => RunConfig::load(p),
            None => Ok(RunConfig::default()),
        }
    }

    pub fn resolve(&self) -> Result<(RunSettings, RunConfig)> {
        let mut s = RunSettings::default();
        let put = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        if let Some(v) = self.variant {
            s.kernel.variant = v;
        }
        put(&mut s.kernel.alpha, self.alpha);
        put(&mut s.kernel.sigma_s, self.sigma_s);
        put(&mut s.kernel.gamma_p, self.gamma_p);
        put(&mut s.kernel.gamma_o, self.gamma_o);
        put(&mut s.gram.threshold, self.sparsify_threshold);
        put(&mut s.solver.lambda, self.lambda);
        put(&mut s.solver.mu, self.mu);
        put(&mut s.solver.rel_tol, self.rel_tol);
        put(&mut s.eval.fov_deg, self.fov);
        put(&mut s.eval.range_cells, self.range);
        s.solver.rank = self.rank.unwrap_or(s.solver.rank);
        s.solver.max_iters = self.max_iters.unwrap_or(s.solver.max_iters);
        s.solver.seed = self.seed.unwrap_or(s.solver.seed);
        s.eval.n_thresholds = self.thresholds.unwrap_or(s.eval.n_thresholds);
        let cfg = self.config()?;
        cfg.apply(&mut s)?;
        Ok((s, cfg))
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub scenes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = World::Compact)]
    pub world: World,
    /// Exact features, detections and demonstration positions.
    #[arg(long)]
    pub noiseless: bool,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Comma-separated scene ids; all scenes when omitted.
    #[arg(long, value_delimiter = ',')]
    pub scenes: Vec<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub factors: PathBuf,
    /// Action map table to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub action_map: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub variants: Vec<KernelVariant>,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sources: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub targets: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct ElapseArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long, value_delimiter = ',')]
    pub fractions: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub settings: SettingsArgs,
}

#[derive(Debug, Args)]
pub struct LocalizeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub action_map: PathBuf,
    #[arg(long)]
    pub scene: String,
    /// One query per line as `activity x y` triples; every labelled cell
    /// becomes its own query when omitted.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub k_max: usize,
    #[arg(long, value_enum, default_value_t = FusionArg::Independent)]
    pub fusion: FusionArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub action_map: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Grid(a) => grid(a),
        Command::Transfer(a) => transfer(a),
        Command::Elapse(a) => elapse(a),
        Command::Localize(a) => localize(a),
        Command::ExportHeatmap(a) => export_heatmap(a),
    }
}

fn load(data: &DatasetArgs) -> Result<(Dataset, Vec<usize>)> {
    let ds = io::read_dataset(&data.dataset)?;
    let selection = ds.select(&data.scenes)?;
    Ok((ds, selection))
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let mut spec = match a.world {
        World::Compact => WorldSpec::compact(),
        World::OfficeA => WorldSpec::office_a_like(),
    };
    if a.noiseless {
        spec = spec.noiseless();
    }
    let generated = generate_dataset(&spec, a.scenes, a.seed)?;
    io::write_dataset(&a.out, &generated.dataset)?;
    for s in &generated.dataset.scenes {
        let st = s.grid.stats();
        println!(
            "{}: {}x{} cells, r_e {:.3}, r_a {:.4}, {} demonstrations, {} images",
            s.id(),
            s.grid.width(),
            s.grid.height(),
            st.r_e,
            st.r_a,
            st.demo_count,
            s.poses.len()
        );
    }
    Ok(())
}

fn fit(a: &FitArgs) -> Result<()> {
    let (ds, selection) = load(&a.data)?;
    let (settings, _) = a.settings.resolve()?;
    let problem = Problem::build(&ds, &selection, &vec![true; selection.len()])?;
    let result = problem.fit(&settings)?;
    let ids: Vec<String> = selection.iter().map(|&s| ds.scenes[s].id().to_string()).collect();
    write_text(&a.out.join("factors.txt"), &io::write_factors(&result.factors.quantized(), &ids))?;
    write_text(&a.out.join("trace.tsv"), &io::write_trace(&result.trace))?;
    println!(
        "{} iterations, {}, objective {}",
        result.iterations,
        if result.converged { "converged" } else { "iteration cap reached" },
        crate::numfmt::fmt9(*result.trace.last().expect("trace holds the start"))
    );
    Ok(())
}

fn predict(a: &PredictArgs) -> Result<()> {
    let ds = io::read_dataset(&a.dataset)?;
    let (factors, ids) = io::read_factors(&read_text(&a.factors)?, &a.factors.display().to_string())?;
    let selection = ds.select(&ids)?;
    let rows: usize = selection.iter().map(|&s| ds.scenes[s].grid.num_cells()).sum();
    if rows != factors.u.nrows() || factors.v.nrows() != ds.vocabulary().len() {
        return Err(Error::ShapeMismatch(format!(
            "factors are {}x{} but the scenes need {rows}x{}",
            factors.u.nrows(),
            factors.v.nrows(),
            ds.vocabulary().len()
        )));
    }
    let am = action_map_from_factors(&factors);
    let mut start = 0;
    let parts: Vec<(usize, ActionMap)> = selection
        .iter()
        .map(|&s| {
            let n = ds.scenes[s].grid.num_cells();
            start += n;
            (s, am.rows(start - n..start))
        })
        .collect();
    let refs: Vec<_> = parts.iter().map(|(s, m)| (&ds.scenes[*s].grid, m)).collect();
    write_text(&a.out, &io::write_action_maps(&refs))
}

fn read_maps(path: &Path, ds: &Dataset) -> Result<Vec<(usize, ActionMap)>> {
    io::read_action_maps(&read_text(path)?, &path.display().to_string(), ds)
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let ds = io::read_dataset(&a.dataset)?;
    let (settings, _) = a.settings.resolve()?;
    let maps = read_maps(&a.action_map, &ds)?;
    let evals: Vec<SceneEvaluation> = maps
        .iter()
        .map(|(s, am)| {
            let scene = &ds.scenes[*s];
            evaluate_scene(am, &scene.grid, &scene.poses, &settings.eval)
        })
        .collect::<Result<_>>()?;
    let mean = mean_summary(&evals);
    write_text(&a.out.join("report.tsv"), &io::write_report(&evals, &mean))?;
    write_text(&a.out.join("per_activity.tsv"), &io::write_activity_report(&evals, ds.vocabulary()))?;
    let mut rows: Vec<(String, _)> = evals.iter().map(|e| (e.scene_id.clone(), e.summary)).collect();
    rows.push(("mean".into(), mean));
    print!("{}", io::format_summary_table(&rows));
    Ok(())
}

fn grid(a: &GridArgs) -> Result<()> {
    let (ds, selection) = load(&a.data)?;
    let (settings, cfg) = a.settings.resolve()?;
    let mut spec = GridSpec::default();
    if !a.alphas.is_empty() {
        spec.alphas = a.alphas.clone();
    }
    if !a.lambdas.is_empty() {
        spec.lambdas = a.lambdas.clone();
    }
    if !a.gammas.is_empty() {
        spec.gammas = a.gammas.clone();
    }
    let mut variants = if a.variants.is_empty() { KernelVariant::ALL.to_vec() } else { a.variants.clone() };
    cfg.apply_grid(&mut spec, &mut variants)?;
    let report = run_parameter_grid(&ds, &selection, &spec, &variants, &settings)?;
    write_text(&a.out.join("grid.tsv"), &io::write_grid_runs(&report))?;
    write_text(&a.out.join("grid_summary.tsv"), &io::write_grid_summary(&report))?;
    for v in &report.variants {
        println!(
            "{:<4} {} runs ({} failed), weighted mean F1 max {:.4} mean {:.4}",
            v.variant.as_str(),
            v.completed + v.failed,
            v.failed,
            v.metrics[1].max,
            v.metrics[1].mean
        );
    }
    Ok(())
}

fn transfer(a: &TransferArgs) -> Result<()> {
    let ds = io::read_dataset(&a.dataset)?;
    let (settings, _) = a.settings.resolve()?;
    let sources = ds.select(&a.sources)?;
    let targets = ds.select(&a.targets)?;
    let report = experiments::transfer(&ds, &sources, &targets, &settings)?;
    write_text(&a.out.join("transfer.tsv"), &io::write_transfer(&report))?;
    let rows: Vec<_> = report.rows.iter().map(|r| (r.method.clone(), r.summary)).collect();
    print!("{}", io::format_summary_table(&rows));
    Ok(())
}

fn elapse(a: &ElapseArgs) -> Result<()> {
    let (ds, selection) = load(&a.data)?;
    let (settings, _) = a.settings.resolve()?;
    let fractions = if a.fractions.is_empty() { DEFAULT_FRACTIONS.to_vec() } else { a.fractions.clone() };
    let points = experiments::elapse(&ds, &selection, &fractions, settings.solver.seed, &settings)?;
    write_text(&a.out.join("elapse.tsv"), &io::write_elapse(&points))?;
    let rows: Vec<_> = points.iter().map(|p| (format!("{}", p.fraction), p.summary)).collect();
    print!("{}", io::format_summary_table(&rows));
    Ok(())
}

/// Queries file: each non-blank line is one sequence of `activity x y`
/// triples, activities by name.
pub fn parse_queries(text: &str, path: &str, ds: &Dataset) -> Result<Vec<LocalizationQuery>> {
    let err = |line: usize, message: String| Error::Parse { path: path.to_string(), line, message };
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let toks: Vec<&str> = line.split('#').next().unwrap_or("").split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() % 3 != 0 {
            return Err(err(i + 1, "expected `activity x y` triples".into()));
        }
        let steps = toks
            .chunks(3)
            .map(|t| {
                let a = ds.vocabulary().index_of(t[0]).ok_or_else(|| err(i + 1, format!("unknown activity `{}`", t[0])))?;
                let coord = |s: &str| s.parse::<usize>().map_err(|_| err(i + 1, format!("bad coordinate `{s}`")));
                Ok(QueryStep::new(a, Cell::new(coord(t[1])?, coord(t[2])?)))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(LocalizationQuery::new(steps)?);
    }
    Ok(out)
}

fn localize(a: &LocalizeArgs) -> Result<()> {
    let ds = io::read_dataset(&a.dataset)?;
    let scene = ds
        .scene_index(&a.scene)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown scene {}", a.scene)))?;
    let maps = read_maps(&a.action_map, &ds)?;
    let am = maps
        .into_iter()
        .find(|(s, _)| *s == scene)
        .map(|(_, m)| m)
        .ok_or_else(|| Error::InvalidParameter(format!("action map has no rows for scene {}", a.scene)))?;
    let grid = &ds.scenes[scene].grid;
    let queries = match &a.queries {
        Some(p) => parse_queries(&read_text(p)?, &p.display().to_string(), &ds)?,
        None => label_queries(grid),
    };
    let fusion = match a.fusion {
        FusionArg::Independent => Fusion::Independent,
        FusionArg::PreviousProduct => Fusion::PreviousProduct,
    };
    let curve = discrepancy_curve(&am.normalized(), grid.width(), &queries, a.k_max, fusion)?;
    write_text(&a.out, &io::write_discrepancy(&curve, ds.vocabulary()))?;
    for (act, name) in ds.vocabulary().names().iter().enumerate() {
        let n = curve.steps_per_activity[act];
        if n == 0 {
            continue;
        }
        match curve.first_k_below(act, 2.0) {
            Some(k) => println!("{name}: {n} steps, under 2 cells from K = {k}"),
            None => println!("{name}: {n} steps, not under 2 cells by K = {}", curve.k_max),
        }
    }
    Ok(())
}

fn export_heatmap(a: &HeatmapArgs) -> Result<()> {
    let ds = io::read_dataset(&a.dataset)?;
    let maps: Vec<(usize, ActionMap)> = read_maps(&a.action_map, &ds)?
        .into_iter()
        .map(|(s, m)| (s, m.normalized().quantized()))
        .collect();
    for (s, am) in &maps {
        let g = &ds.scenes[*s].grid;
        for (act, name) in ds.vocabulary().names().iter().enumerate() {
            let col: Vec<f64> = am.values().column(act).to_vec();
            write_text(
                &a.out.join(format!("{}_{name}.pgm", g.scene_id())),
                &io::write_pgm(&col, g.width(), g.height()),
            )?;
        }
    }
    let refs: Vec<_> = maps.iter().map(|(s, m)| (&ds.scenes[*s].grid, m)).collect();
    write_text(&a.out.join("heatmap.tsv"), &io::write_action_maps(&refs))?;
    println!("{} scenes x {} activities", maps.len(), ds.vocabulary().len());
    Ok(())
}
