//! Command-line interface.
//!
//! Every subcommand writes its artifacts and a `run-manifest.json` into the
//! output directory and prints a short summary to stdout. Exit codes: 0 on
//! success, 1 on invalid input, 2 when a numerical procedure fails, 64 on
//! a malformed command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mlvsbm_core::generate::{sample_affiliation, sample_network, Design, SizeLaw, Topology, DEFAULT_POWER_LAW_EXPONENT};
use mlvsbm_core::init::InitMethod;
use mlvsbm_core::network::MaskMode;
use mlvsbm_core::predict::{
    ari, prediction_experiment, score_dyads, summarize, ExperimentOptions, PredictModel, PredictionScores, Refit,
    TargetSet,
};
use mlvsbm_core::rng::{derive_seed, STREAM_VERSION};
use mlvsbm_core::select::{select_with, SelectOptions};
use mlvsbm_core::vem::{fit_from, fit_with, FitOptions, VariationalState};
use mlvsbm_core::{Assignments, Level, MultilevelNetwork};
use serde::Serialize;

use crate::error::{IoError, IoResult};
use crate::format::{self, AssignmentsJson, CsvLayout, CsvPaths, FitJson, NetworkBundle, ParamsJson, SelectionJson};
use crate::Parallel;

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_190_101;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

pub const MANIFEST: &str = "run-manifest.json";

#[derive(Debug, Parser)]
#[command(name = "mlvsbm", version, about = "Multilevel stochastic block model toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a multilevel network from a preset design or a parameter file.
    Simulate(SimulateArgs),
    /// Fit the model with fixed block counts.
    Fit(FitArgs),
    /// Choose block counts and level dependence by ICL.
    Select(SelectArgs),
    /// Score dyads with a saved fit.
    Predict(PredictArgs),
    /// Compare two clusterings by adjusted Rand index.
    Evaluate(EvaluateArgs),
    /// Masking experiment: hide dyads or links, refit, report AUC.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Input network: a JSON bundle or a directory of CSV files.
    #[arg(short, long)]
    pub input: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long, default_value = ".")]
    pub output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Relative bound improvement that stops the EM loop.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Cap on EM iterations per fit.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Largest block count considered by selection.
    #[arg(long, default_value_t = 10)]
    pub q_max: usize,
    /// Format of network and score outputs.
    #[arg(long, value_enum, default_value = "json")]
    #[serde(skip)]
    pub format: OutputFormat,
    /// Individual edge list (CSV `from,to`).
    #[arg(long, requires_all = ["org_edges", "affiliation"])]
    pub ind_edges: Option<PathBuf>,
    /// Organization edge list (CSV `from,to`).
    #[arg(long)]
    pub org_edges: Option<PathBuf>,
    /// Affiliation list (CSV `individual,organization`).
    #[arg(long)]
    pub affiliation: Option<PathBuf>,
    /// Hidden individual dyads (CSV `from,to`).
    #[arg(long)]
    pub mask_ind: Option<PathBuf>,
    /// Hidden organization dyads (CSV `from,to`).
    #[arg(long)]
    pub mask_org: Option<PathBuf>,
    /// Number of organizations (CSV input; also the simulated count).
    #[arg(long)]
    pub n_org: Option<usize>,
    /// CSV individual edges are directed.
    #[arg(long)]
    pub directed_ind: bool,
    /// CSV organization edges are directed.
    #[arg(long)]
    pub directed_org: bool,
}

impl Common {
    fn network(&self) -> IoResult<MultilevelNetwork> {
        let layout = CsvLayout {
            directed_ind: self.directed_ind,
            directed_org: self.directed_org,
            n_org: self.n_org,
        };
        if let (Some(ind), Some(org), Some(aff)) = (&self.ind_edges, &self.org_edges, &self.affiliation) {
            let paths = CsvPaths {
                ind: ind.clone(),
                org: org.clone(),
                affiliation: aff.clone(),
                mask_ind: self.mask_ind.clone(),
                mask_org: self.mask_org.clone(),
            };
            return format::load_network(&paths, &layout);
        }
        match &self.input {
            Some(p) => format::load_any(p, &layout),
            None => Err(invalid("no input: give -i or --ind-edges/--org-edges/--affiliation")),
        }
    }

    fn fit_options(&self) -> FitOptions {
        let mut o = FitOptions {
            seed: self.seed,
            ..FitOptions::default()
        };
        if let Some(t) = self.tolerance {
            o.bound_rel_tolerance = t;
        }
        if let Some(m) = self.max_iter {
            o.max_outer_iterations = m;
        }
        o
    }

    fn executor(&self) -> IoResult<Parallel> {
        if self.jobs == 0 {
            return Err(invalid("--jobs must be at least 1"));
        }
        Ok(Parallel::new(self.jobs))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    S4Assortative,
    S4Disassortative,
    S4Coreperiphery,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Design of the individual level; the organization level is assortative.
    #[arg(long, value_enum, default_value = "s4-assortative")]
    pub preset: Preset,
    /// Parameter file (ModelParams JSON) used instead of a preset.
    #[arg(long, conflicts_with = "preset")]
    pub params: Option<PathBuf>,
    /// Dependence strength: probability that an individual copies its
    /// organization's block.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub n_ind: Option<usize>,
    /// Individual level base probability.
    #[arg(long)]
    pub ind_d: Option<f64>,
    /// Individual level contrast.
    #[arg(long)]
    pub ind_eps: Option<f64>,
    #[arg(long)]
    pub org_d: Option<f64>,
    #[arg(long)]
    pub org_eps: Option<f64>,
    /// Organization sizes uniform in law instead of power law.
    #[arg(long)]
    pub uniform_sizes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Spectral,
    Hierarchical,
    Random,
    Given,
}

impl From<InitArg> for InitMethod {
    fn from(a: InitArg) -> Self {
        match a {
            InitArg::Spectral => InitMethod::Spectral,
            InitArg::Hierarchical => InitMethod::Hierarchical,
            InitArg::Random => InitMethod::Random,
            InitArg::Given => InitMethod::Given,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub q_ind: usize,
    #[arg(long)]
    pub q_org: usize,
    #[arg(long, value_enum, default_value = "spectral")]
    pub init: InitArg,
    /// Initial memberships (Assignments JSON) for `--init given`.
    #[arg(long)]
    pub assignments: Option<PathBuf>,
    /// Number of restarts, the first one unperturbed.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Fit the model with gamma tied to the individual block proportions.
    #[arg(long)]
    pub independent: bool,
    /// Weight of the new memberships in each fixed-point sweep.
    #[arg(long)]
    pub damping: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub common: Common,
    /// Cap on split/merge search rounds.
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// Random restarts per candidate fit.
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, hide = true)]
    pub exhaustive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Ind,
    Org,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Ind => Level::Ind,
            LevelArg::Org => Level::Org,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Masked,
    ZeroDyads,
    All,
}

impl From<TargetArg> for TargetSet {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Masked => TargetSet::Masked,
            TargetArg::ZeroDyads => TargetSet::ZeroDyads,
            TargetArg::All => TargetSet::AllOffDiagonal,
        }
    }
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: Common,
    /// Fit JSON written by `fit` or `select`.
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long, value_enum, default_value = "ind")]
    pub level: LevelArg,
    #[arg(long, value_enum, default_value = "masked")]
    pub target: TargetArg,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Reference memberships (Assignments JSON).
    #[arg(long)]
    pub truth: PathBuf,
    /// Predicted memberships: Assignments JSON or a fit JSON.
    #[arg(long)]
    pub pred: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Dyads,
    Links,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Mlvsbm,
    Sbm,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3])]
    pub fractions: Vec<f64>,
    #[arg(long, value_enum, default_value = "dyads")]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value = "ind")]
    pub level: LevelArg,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["mlvsbm", "sbm"])]
    pub models: Vec<ModelArg>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    /// Fixed block counts instead of selection; requires `--q-org` too.
    #[arg(long, requires = "q_org")]
    pub q_ind: Option<usize>,
    #[arg(long, requires = "q_ind")]
    pub q_org: Option<usize>,
    /// Random restarts per refit.
    #[arg(long)]
    pub restarts: Option<usize>,
}

fn invalid(msg: &str) -> IoError {
    IoError::Core(mlvsbm_core::Error::InvalidArgument(msg.into()))
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
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(summary) => {
            print!("{summary}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_INVALID
            }
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    core_version: &'a str,
    stream_version: &'a str,
    seed: u64,
    jobs: usize,
    config: C,
    outputs: Vec<String>,
    wall_time_seconds: f64,
}

/// Runs one command and returns the stdout summary.
pub fn execute(cmd: &Command) -> IoResult<String> {
    let start = Instant::now();
    let (name, common, outcome) = match cmd {
        Command::Simulate(a) => ("simulate", &a.common, simulate(a)),
        Command::Fit(a) => ("fit", &a.common, fit(a)),
        Command::Select(a) => ("select", &a.common, select(a)),
        Command::Predict(a) => ("predict", &a.common, predict(a)),
        Command::Evaluate(a) => ("evaluate", &a.common, evaluate(a)),
        Command::Experiment(a) => ("experiment", &a.common, experiment(a)),
    };
    let Outcome { summary, outputs, config } = outcome?;
    let manifest = Manifest {
        command: name,
        version: env!("CARGO_PKG_VERSION"),
        core_version: mlvsbm_core::VERSION,
        stream_version: STREAM_VERSION,
        seed: common.seed,
        jobs: common.jobs,
        config,
        outputs: outputs
            .iter()
            .map(|p| p.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned()))
            .collect(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    format::write_json(&common.output.join(MANIFEST), &manifest)?;
    Ok(summary)
}

struct Outcome {
    summary: String,
    outputs: Vec<PathBuf>,
    config: serde_json::Value,
}

fn out_dir(common: &Common) -> IoResult<&Path> {
    std::fs::create_dir_all(&common.output).map_err(|e| IoError::Io {
        path: common.output.clone(),
        source: e,
    })?;
    Ok(&common.output)
}

fn config_json<T: Serialize>(common: &Common, extra: T) -> serde_json::Value {
    serde_json::json!({ "common": common, "command": extra })
}

fn write_network(dir: &Path, net: &MultilevelNetwork, fmt: OutputFormat) -> IoResult<Vec<PathBuf>> {
    match fmt {
        OutputFormat::Csv => format::save_network(dir, net),
        OutputFormat::Json => {
            let p = dir.join("network.json");
            format::write_json(&p, &NetworkBundle::from_network(net))?;
            Ok(vec![p])
        }
    }
}

fn simulate(a: &SimulateArgs) -> IoResult<Outcome> {
    let c = &a.common;
    let dir = out_dir(c)?;
    let mut design = Design::standard(match a.preset {
        Preset::S4Assortative => Topology::Assortative,
        Preset::S4Disassortative => Topology::Disassortative,
        Preset::S4Coreperiphery => Topology::CorePeriphery,
    });
    design.n_ind = a.n_ind.unwrap_or(design.n_ind);
    design.n_org = c.n_org.unwrap_or(design.n_org);
    design.delta = a.delta.unwrap_or(design.delta);
    design.ind_d = a.ind_d.unwrap_or(design.ind_d);
    design.ind_eps = a.ind_eps.unwrap_or(design.ind_eps);
    design.org_d = a.org_d.unwrap_or(design.org_d);
    design.org_eps = a.org_eps.unwrap_or(design.org_eps);
    design.directed_ind = c.directed_ind;
    design.directed_org = c.directed_org;
    if a.uniform_sizes {
        design.size_law = SizeLaw::Uniform;
    }
    let (net, truth, params) = match &a.params {
        None => design.sample(c.seed)?,
        Some(p) => {
            let params = format::read_json::<ParamsJson>(p)?.to_params()?;
            let aff = sample_affiliation(design.n_ind, design.n_org, design.size_law, derive_seed(c.seed, 0))?;
            let (net, z) = sample_network(&params, design.n_ind, design.n_org, &aff, derive_seed(c.seed, 1))?;
            (net, z, params)
        }
    };
    let mut outputs = write_network(dir, &net, c.format)?;
    let truth_path = dir.join("truth.json");
    format::write_json(&truth_path, &AssignmentsJson::from(&truth))?;
    let params_path = dir.join("params.json");
    format::write_json(&params_path, &ParamsJson::from(&params))?;
    outputs.extend([truth_path, params_path]);
    let stats = net.stats();
    let summary = format!(
        "simulated n_ind={} n_org={} edges_ind={} edges_org={} density_ind={:.4} density_org={:.4}\n",
        net.n_ind(),
        net.n_org(),
        net.ind().n_edges(),
        net.org().n_edges(),
        stats.density_ind,
        stats.density_org,
    );
    let config = config_json(
        c,
        serde_json::json!({
            "preset": a.preset,
            "params_file": a.params,
            "n_ind": design.n_ind,
            "n_org": design.n_org,
            "delta": design.delta,
            "ind_d": design.ind_d,
            "ind_eps": design.ind_eps,
            "org_d": design.org_d,
            "org_eps": design.org_eps,
            "size_law": if a.uniform_sizes { "uniform".to_string() } else { format!("power-law({DEFAULT_POWER_LAW_EXPONENT})") },
        }),
    );
    Ok(Outcome { summary, outputs, config })
}

fn fit(a: &FitArgs) -> IoResult<Outcome> {
    let c = &a.common;
    let net = c.network()?;
    let mut opts = c.fit_options();
    opts.init_method = a.init.into();
    opts.independent_levels = a.independent;
    if let Some(r) = a.restarts {
        opts.n_random_restarts = r;
    }
    if let Some(d) = a.damping {
        opts.damping = d;
    }
    let result = match a.init {
        InitArg::Given => {
            let path = a.assignments.as_ref().ok_or_else(|| invalid("--init given needs --assignments"))?;
            let z: Assignments = format::read_json::<AssignmentsJson>(path)?.into();
            z.check(a.q_ind, a.q_org)?;
            if z.z_ind.len() != net.n_ind() || z.z_org.len() != net.n_org() {
                return Err(invalid("assignments do not match the network size"));
            }
            opts.check()?;
            fit_from(&net, VariationalState::from_labels(&z.z_ind, a.q_ind, &z.z_org, a.q_org), &opts)?
        }
        _ => fit_with(&net, a.q_ind, a.q_org, &opts, &c.executor()?)?,
    };
    let dir = out_dir(c)?;
    let path = dir.join("fit.json");
    format::write_json(&path, &FitJson::new(&result, &opts))?;
    let mut summary = format!(
        "fit q=({},{}) bound={:.6} icl={:.6} iterations={} converged={} restart={}\n",
        a.q_ind, a.q_org, result.bound, result.icl, result.n_iterations, result.converged, result.restart
    );
    for w in &result.warnings {
        summary.push_str(&format!("warning: {w}\n"));
    }
    let config = config_json(
        c,
        serde_json::json!({
            "q_ind": a.q_ind,
            "q_org": a.q_org,
            "fit_options": format::OptionsJson::from(&opts),
            "assignments": a.assignments,
        }),
    );
    Ok(Outcome {
        summary,
        outputs: vec![path],
        config,
    })
}

fn select(a: &SelectArgs) -> IoResult<Outcome> {
    let c = &a.common;
    let net = c.network()?;
    let mut opts = SelectOptions {
        q_max: c.q_max,
        fit: c.fit_options(),
        exhaustive: a.exhaustive,
        ..SelectOptions::default()
    };
    if let Some(r) = a.max_rounds {
        opts.max_rounds = r;
    }
    if let Some(r) = a.restarts {
        opts.fit.n_random_restarts = r;
    }
    let result = select_with(&net, &opts, &c.executor()?)?;
    let dir = out_dir(c)?;
    let sel_path = dir.join("selection.json");
    format::write_json(&sel_path, &SelectionJson::new(&result, &opts.fit))?;
    let fit_path = dir.join("fit.json");
    format::write_json(&fit_path, &FitJson::new(&result.best_fit, &opts.fit))?;
    let sel = result.selected_q();
    let mut summary = format!(
        "selected q=({},{}) verdict={} icl_mlvsbm={:.6} icl_independent={:.6} explored={}\n",
        sel.0,
        sel.1,
        result.verdict.as_str(),
        result.icl_mlvsbm(),
        result.icl_independent,
        result.explored.len()
    );
    for w in &result.warnings {
        summary.push_str(&format!("warning: {w}\n"));
    }
    let config = config_json(
        c,
        serde_json::json!({
            "max_rounds": opts.max_rounds,
            "exhaustive": opts.exhaustive,
            "fit_options": format::OptionsJson::from(&opts.fit),
        }),
    );
    Ok(Outcome {
        summary,
        outputs: vec![sel_path, fit_path],
        config,
    })
}

fn predict(a: &PredictArgs) -> IoResult<Outcome> {
    let c = &a.common;
    let net = c.network()?;
    let (params, state) = format::read_json::<FitJson>(&a.fit)?.to_model()?;
    let level: Level = a.level.into();
    let target: TargetSet = a.target.into();
    let (tau, alpha) = match level {
        Level::Ind => (&state.tau_ind, &params.alpha_ind),
        Level::Org => (&state.tau_org, &params.alpha_org),
    };
    let g = net.level(level);
    if tau.rows() != g.n() {
        return Err(invalid("fit does not match the network size"));
    }
    let dyads = mlvsbm_core::predict::target_dyads(g, target);
    if dyads.is_empty() {
        return Err(invalid(&format!("no {} dyads to score on the {level} level", target.as_str())));
    }
    let scores = PredictionScores {
        level,
        target,
        scores: score_dyads(tau, alpha, &dyads),
        dyads,
    };
    let dir = out_dir(c)?;
    let path = match c.format {
        OutputFormat::Csv => {
            let p = dir.join("scores.csv");
            format::write_scores(&p, &scores)?;
            p
        }
        OutputFormat::Json => {
            let p = dir.join("scores.json");
            let body = serde_json::json!({
                "level": level.as_str(),
                "target": target.as_str(),
                "dyads": scores.dyads.iter().map(|&(i, j)| [i, j]).collect::<Vec<_>>(),
                "scores": scores.scores,
            });
            format::write_json(&p, &body)?;
            p
        }
    };
    let mean = scores.scores.iter().sum::<f64>() / scores.scores.len() as f64;
    let summary = format!(
        "scored {} {} dyads on the {level} level, mean score {mean:.6}\n",
        scores.dyads.len(),
        target.as_str()
    );
    let config = config_json(
        c,
        serde_json::json!({ "fit": a.fit, "level": level.as_str(), "target": target.as_str() }),
    );
    Ok(Outcome {
        summary,
        outputs: vec![path],
        config,
    })
}

fn read_memberships(path: &Path) -> IoResult<Assignments> {
    if let Ok(a) = format::read_json::<AssignmentsJson>(path) {
        return Ok(a.into());
    }
    Ok(format::read_json::<FitJson>(path)?.map_assignments())
}

fn evaluate(a: &EvaluateArgs) -> IoResult<Outcome> {
    let c = &a.common;
    let truth = read_memberships(&a.truth)?;
    let pred = read_memberships(&a.pred)?;
    let ari_ind = ari(&truth.z_ind, &pred.z_ind)?;
    let ari_org = ari(&truth.z_org, &pred.z_org)?;
    let dir = out_dir(c)?;
    let path = dir.join("evaluation.json");
    format::write_json(&path, &serde_json::json!({ "ari_ind": ari_ind, "ari_org": ari_org }))?;
    let config = config_json(c, serde_json::json!({ "truth": a.truth, "pred": a.pred }));
    Ok(Outcome {
        summary: format!("ari_ind={ari_ind:.6}\nari_org={ari_org:.6}\n"),
        outputs: vec![path],
        config,
    })
}

fn experiment(a: &ExperimentArgs) -> IoResult<Outcome> {
    let c = &a.common;
    let net = c.network()?;
    let mut select_opts = SelectOptions {
        q_max: c.q_max,
        fit: c.fit_options(),
        ..SelectOptions::default()
    };
    if let Some(r) = a.restarts {
        select_opts.fit.n_random_restarts = r;
    }
    let opts = ExperimentOptions {
        fractions: a.fractions.clone(),
        mode: match a.mode {
            ModeArg::Dyads => MaskMode::Dyads,
            ModeArg::Links => MaskMode::Links,
        },
        level: a.level.into(),
        models: a
            .models
            .iter()
            .map(|m| match m {
                ModelArg::Mlvsbm => PredictModel::Mlvsbm,
                ModelArg::Sbm => PredictModel::Sbm,
            })
            .collect(),
        repeats: a.repeats,
        seed: c.seed,
        refit: match (a.q_ind, a.q_org) {
            (Some(q_ind), Some(q_org)) => Refit::Fixed { q_ind, q_org },
            _ => Refit::Select,
        },
        select: select_opts,
    };
    let records = prediction_experiment(&net, &opts, &c.executor()?)?;
    let summary_rows = summarize(&records);
    let dir = out_dir(c)?;
    let rec_path = dir.join("auc.csv");
    format::write_auc_records(&rec_path, &records)?;
    let sum_path = dir.join("auc_summary.csv");
    format::write_auc_summary(&sum_path, &summary_rows)?;
    let mut summary = String::new();
    for s in &summary_rows {
        summary.push_str(&format!(
            "fraction={} model={} mean_auc={:.4} stderr={:.4} n={}\n",
            s.fraction,
            s.model.as_str(),
            s.mean_auc,
            s.stderr,
            s.n
        ));
    }
    let config = config_json(
        c,
        serde_json::json!({
            "fractions": a.fractions,
            "mode": format!("{:?}", opts.mode).to_lowercase(),
            "level": opts.level.as_str(),
            "models": opts.models.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
            "repeats": a.repeats,
            "refit": match opts.refit { Refit::Select => "select".to_string(), Refit::Fixed { q_ind, q_org } => format!("fixed({q_ind},{q_org})") },
            "fit_options": format::OptionsJson::from(&opts.select.fit),
        }),
    );
    Ok(Outcome {
        summary,
        outputs: vec![rec_path, sum_path],
        config,
    })
}
