use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod report;

/// Specification constants, pressure, equilibrium states, equidistribution,
/// entropy density and large deviations for suspension flows and geodesic
/// flows on metric graphs.
#[derive(Debug, Parser, Serialize)]
#[command(name = "thermoflow", version)]
struct Cli {
    /// Worker threads for order-independent kernels (Monte Carlo counts,
    /// cycle enumeration).
    #[arg(long, global = true, default_value_t = 1)]
    #[serde(skip)]
    threads: usize,

    /// Directory for the JSON report and CSV tables.
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Shift of finite type (JSON transition matrix).
    #[arg(long)]
    pub sft: Option<PathBuf>,
    /// Metric graph (JSON); the flow is its geodesic flow.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct Model {
    #[command(flatten)]
    pub source: Source,
    /// Roof function for --sft (default: constant 1).
    #[arg(long, conflicts_with = "graph")]
    pub roof: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Spectral,
    Separated,
    Gurevic,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateArg {
    Legendre,
    Direct,
    Both,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Gap bound of the base shift with one gap word per symbol pair.
    SpecTau {
        #[command(flatten)]
        model: Model,
    },
    /// Glue orbit segments and verify the shadowing.
    Glue {
        #[command(flatten)]
        model: Model,
        /// JSON list of {point, duration}.
        #[arg(long)]
        segments: PathBuf,
        #[arg(long)]
        delta: f64,
    },
    /// Topological pressure by one or all methods.
    Pressure {
        #[command(flatten)]
        model: Model,
        /// Potential (JSON); zero when absent.
        #[arg(long)]
        potential: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "all")]
        method: MethodArg,
        /// Horizon for the separated and Gurevic methods (default 12 max r).
        #[arg(long)]
        max_period: Option<f64>,
    },
    /// Equilibrium state and the variational identity.
    Equilibrium {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        potential: Option<PathBuf>,
    },
    /// Ratios of Bowen-ball measures to exp(-tP + Phi) on sampled points.
    Gibbs {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        potential: Option<PathBuf>,
        /// Ball radius (default half the expansivity scale).
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, value_delimiter = ',', default_value = "10,20,30")]
        t_grid: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Distance from weighted periodic-orbit measures to the equilibrium state.
    Equidistribute {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        potential: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "4,8,12")]
        t_grid: Vec<f64>,
    },
    /// Rate function and Monte Carlo deviation frequencies.
    Ldp {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        potential: Option<PathBuf>,
        /// Observable (JSON cylinder potential).
        #[arg(long)]
        psi: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1")]
        epsilon: Vec<f64>,
        #[arg(long, value_enum, default_value = "both")]
        method: RateArg,
        /// Averaging time for the Monte Carlo estimate.
        #[arg(long, default_value_t = 50.0)]
        t: f64,
        /// Monte Carlo samples; 0 skips the estimate.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Ergodic approximation of a convex combination, with the optional
    /// glued-family counting certificate.
    EntropyDense {
        #[command(flatten)]
        model: Model,
        /// JSON {components: [{weight, kernel}]}.
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        eta: f64,
        /// Block length for the glued family; skipped when absent.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 3)]
        m: usize,
        #[arg(long)]
        seed: u64,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SpecTau { .. } => "spec-tau",
            Command::Glue { .. } => "glue",
            Command::Pressure { .. } => "pressure",
            Command::Equilibrium { .. } => "equilibrium",
            Command::Gibbs { .. } => "gibbs",
            Command::Equidistribute { .. } => "equidistribute",
            Command::Ldp { .. } => "ldp",
            Command::EntropyDense { .. } => "entropy-dense",
        }
    }
}

const EXIT_FAILURE: u8 = 1;
const EXIT_MODEL: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_USAGE: u8 = 64;

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<thermoflow::Error>()) {
        Some(e) if e.is_model_rejection() => EXIT_MODEL,
        Some(thermoflow::Error::Parse(_)) => EXIT_MODEL,
        Some(e) if e.is_non_convergence() => EXIT_NUMERICAL,
        Some(thermoflow::Error::Infeasible { .. }) => EXIT_NUMERICAL,
        _ => EXIT_FAILURE,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("THERMOFLOW_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build_global() {
        log::warn!("thread pool: {e}");
    }
    match commands::run(&cli.command).and_then(|r| r.emit(cli.out.as_ref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
