//! Command-line front end. [`run`] parses arguments, dispatches to a
//! subcommand and maps the outcome to an exit code: 0 on success, 2 when a
//! fit did not converge, 1 on any input or runtime error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bernstein::{self, BernsteinConstants, BernsteinMcConfig};
use crate::dictionary::DictionaryMatrix;
use crate::error::{Error, Result};
use crate::gram::GramSystem;
use crate::oracle::{self, ConeSearchOptions, Design, OracleMcConfig};
use crate::par::{init_threads, Execution};
use crate::simulate::{SimulationConfig, Simulator};
use crate::solver::{fit, fit_path, Constraint, LassoFit, Multiplier, SolverOptions};
use crate::survival::{RiskSetTimeline, SurvivalDataset};
use crate::weights::{compute_weights, default_x, WeightVector};
use crate::REPORT_SCHEMA;

#[derive(Debug, Parser)]
#[command(name = "aalen", version, about = "Weighted Lasso for the Aalen additive hazards model")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Run Monte-Carlo replications on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the weighted Lasso to a dataset.
    Fit(FitArgs),
    /// Compute the data-driven weights only.
    Weights(DataArgs),
    /// Draw a dataset from a simulation config.
    Simulate(SimulateArgs),
    /// Monte-Carlo check of the empirical Bernstein inequality.
    BernsteinMc(BernsteinArgs),
    /// Monte-Carlo check of the oracle inequalities.
    OracleCheck(OracleArgs),
    /// Warm-started fits along a grid of penalty scales.
    Path(PathArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with header `time,status,<covariates...>`.
    #[arg(long)]
    pub data: PathBuf,
    /// Dictionary CSV, one row per record; defaults to the covariates.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    /// Confidence level of the weights (default log 20).
    #[arg(long)]
    pub x: Option<f64>,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kappa {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

impl From<Kappa> for Multiplier {
    fn from(k: Kappa) -> Self {
        match k {
            Kappa::One => Multiplier::Single,
            Kappa::Two => Multiplier::Double,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Penalty multiplier.
    #[arg(long, value_enum, default_value = "1")]
    pub kappa: Kappa,
    /// Restrict coefficients to be nonnegative.
    #[arg(long)]
    pub nonneg: bool,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_sweeps: usize,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            multiplier: self.kappa.into(),
            constraint: if self.nonneg {
                Constraint::Nonnegative
            } else {
                Constraint::Unconstrained
            },
            tol: self.tol,
            max_sweeps: self.max_sweeps,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write `H_n` and `h_n` as CSV.
    #[arg(long)]
    pub dump_gram: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Descending multipliers applied to the weights.
    #[arg(long, value_delimiter = ',', required = true)]
    pub scales: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config JSON; the default design when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_data: PathBuf,
    #[arg(long)]
    pub out_truth: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    PaperNumeric,
}

#[derive(Debug, Args)]
pub struct BernsteinArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "4,5,6")]
    pub x_grid: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, value_enum, default_value = "paper-numeric")]
    pub preset: Preset,
    /// Custom constants `c_ell,epsilon,c0`, overriding the preset.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub constants: Option<Vec<f64>>,
    /// Covariate columns (0-based) whose noise is tested.
    #[arg(long, value_delimiter = ',', default_value = "0,3")]
    pub columns: Vec<usize>,
    /// Also check the bound with the predictable variation.
    #[arg(long)]
    pub classical: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DesignArg {
    Linear,
    Whitened,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 5.0)]
    pub x: f64,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, value_enum, default_value = "linear")]
    pub design: DesignArg,
    /// Random cone directions per replication for the fast check on the
    /// linear design; 0 skips that check.
    #[arg(long, default_value_t = 0)]
    pub search_budget: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_threads(cli.threads);
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match dispatch(cli.command, exec) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command, exec: Execution) -> Result<i32> {
    match command {
        Command::Fit(a) => fit_command(&a),
        Command::Weights(a) => weights_command(&a),
        Command::Simulate(a) => simulate_command(&a),
        Command::BernsteinMc(a) => bernstein_command(&a, exec),
        Command::OracleCheck(a) => oracle_command(&a, exec),
        Command::Path(a) => path_command(&a),
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn read_config(path: Option<&Path>) -> Result<SimulationConfig> {
    match path {
        None => Ok(SimulationConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::File {
                path: p.to_path_buf(),
                message: e.to_string(),
            })
        }
    }
}

struct Prepared {
    data: SurvivalDataset,
    dict: DictionaryMatrix,
    system: GramSystem,
    weights: WeightVector,
}

fn prepare(a: &DataArgs) -> Result<Prepared> {
    let x = a.x.unwrap_or_else(default_x);
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::param("x must be positive"));
    }
    let data = SurvivalDataset::load_csv(&a.data)?;
    let dict = match &a.dict {
        Some(p) => DictionaryMatrix::load_csv(&data, p)?,
        None => DictionaryMatrix::linear(&data),
    };
    let timeline = RiskSetTimeline::build(&data);
    let system = GramSystem::build(&dict, &timeline)?;
    let weights = compute_weights(&dict, &system, x)?;
    Ok(Prepared {
        data,
        dict,
        system,
        weights,
    })
}

#[derive(Serialize)]
struct DataSummary<'a> {
    n: usize,
    events: usize,
    time_scale: f64,
    labels: &'a [String],
    dead_columns: Vec<usize>,
}

impl<'a> DataSummary<'a> {
    fn of(p: &'a Prepared) -> Self {
        Self {
            n: p.data.len(),
            events: p.data.event_count(),
            time_scale: p.data.time_scale(),
            labels: p.dict.labels(),
            dead_columns: p.system.dead_columns(),
        }
    }
}

#[derive(Serialize)]
struct FitReport<'a> {
    schema: &'static str,
    data: DataSummary<'a>,
    weights: &'a WeightVector,
    fit: &'a LassoFit,
}

fn fit_command(a: &FitArgs) -> Result<i32> {
    let p = prepare(&a.data)?;
    if let Some(path) = &a.dump_gram {
        p.system.dump_csv(p.dict.labels(), path)?;
    }
    let f = fit(&p.system, &p.weights, &a.solver.options())?;
    write_json(
        &FitReport {
            schema: REPORT_SCHEMA,
            data: DataSummary::of(&p),
            weights: &p.weights,
            fit: &f,
        },
        a.data.out.as_deref(),
    )?;
    Ok(if f.converged { 0 } else { 2 })
}

#[derive(Serialize)]
struct WeightsReport<'a> {
    schema: &'static str,
    data: DataSummary<'a>,
    weights: &'a WeightVector,
}

fn weights_command(a: &DataArgs) -> Result<i32> {
    let p = prepare(a)?;
    write_json(
        &WeightsReport {
            schema: REPORT_SCHEMA,
            data: DataSummary::of(&p),
            weights: &p.weights,
        },
        a.out.as_deref(),
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct PathReport<'a> {
    schema: &'static str,
    data: DataSummary<'a>,
    weights: &'a WeightVector,
    scales: &'a [f64],
    fits: Vec<LassoFit>,
}

fn path_command(a: &PathArgs) -> Result<i32> {
    let p = prepare(&a.data)?;
    let fits = fit_path(&p.system, &p.weights, &a.scales, &a.solver.options())?;
    let converged = fits.iter().all(|f| f.converged);
    write_json(
        &PathReport {
            schema: REPORT_SCHEMA,
            data: DataSummary::of(&p),
            weights: &p.weights,
            scales: &a.scales,
            fits,
        },
        a.data.out.as_deref(),
    )?;
    Ok(if converged { 0 } else { 2 })
}

#[derive(Serialize)]
struct TruthReport<'a> {
    schema: &'static str,
    config: &'a SimulationConfig,
    negative_rate: f64,
    events: usize,
    rejections: usize,
    beta0: &'a [f64],
    h0: &'a [f64],
    /// `null` where the latent event falls beyond `t = 1`.
    latent_times: Vec<Option<f64>>,
}

fn simulate_command(a: &SimulateArgs) -> Result<i32> {
    let mut config = read_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        config.seed = s;
    }
    let sim = Simulator::new(&config)?;
    let truth = sim.replicate(0)?;
    truth.dataset.write_csv(&a.out_data)?;
    write_json(
        &TruthReport {
            schema: REPORT_SCHEMA,
            config: &config,
            negative_rate: sim.negative_rate(),
            events: truth.event_count,
            rejections: truth.rejections,
            beta0: &truth.beta0,
            h0: &truth.h0,
            latent_times: truth.latent_times.iter().map(|t| t.is_finite().then_some(*t)).collect(),
        },
        Some(&a.out_truth),
    )?;
    Ok(0)
}

fn bernstein_command(a: &BernsteinArgs, exec: Execution) -> Result<i32> {
    let mut simulation = read_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        simulation.seed = s;
    }
    let (constants, preset) = match &a.constants {
        Some(c) => (BernsteinConstants::new(c[0], c[1], c[2])?, None),
        None => match a.preset {
            Preset::PaperNumeric => (BernsteinConstants::paper_numeric(), Some("paper-numeric".to_string())),
        },
    };
    let config = BernsteinMcConfig {
        simulation,
        columns: a.columns.clone(),
        x_grid: a.x_grid.clone(),
        replications: a.reps,
        constants,
        preset,
        classical: a.classical,
    };
    let report = bernstein::run_mc(&config, exec)?;
    write_json(&report, a.out.as_deref())?;
    Ok(0)
}

fn oracle_command(a: &OracleArgs, exec: Execution) -> Result<i32> {
    let mut simulation = read_config(a.config.as_deref())?;
    if let Some(s) = a.seed {
        simulation.seed = s;
    }
    let config = OracleMcConfig {
        simulation,
        x: a.x,
        replications: a.reps,
        design: match a.design {
            DesignArg::Linear => Design::Linear,
            DesignArg::Whitened => Design::Whitened,
        },
        search: (a.search_budget > 0).then(|| ConeSearchOptions {
            budget: a.search_budget,
            seed: a.seed.unwrap_or(0),
            refine: true,
        }),
    };
    let report = oracle::run_mc(&config, exec)?;
    write_json(&report, a.out.as_deref())?;
    Ok(0)
}
