//! Command-line front end: ingest, estimate, diagnose, rolling, simulate, hac-tau.
//!
//! Exit codes: 0 success, 1 I/O or usage, 2 domain or data error,
//! 3 diagnostic threshold failure, 4 internal consistency failure.

mod commands;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use contagion_core::diagnostics::{ScatterFormat, DEFAULT_THRESHOLD};
use contagion_core::estimator::{Distance, RollingMode, TauBasis};
use contagion_core::hac::SystemicPosition;
use thiserror::Error;

pub use manifest::MANIFEST_NAME;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_THRESHOLD: i32 = 3;
pub const EXIT_CONSISTENCY: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] contagion_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("specification check failed: RMSE {rmse:.6} exceeds threshold {threshold}")]
    Threshold { rmse: f64, threshold: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use contagion_core::Error as E;
        match self {
            Self::Io { .. } | Self::Usage(_) => EXIT_IO,
            Self::Threshold { .. } => EXIT_THRESHOLD,
            Self::Core(E::Io(_)) => EXIT_IO,
            Self::Core(E::Consistency { .. }) => EXIT_CONSISTENCY,
            Self::Core(_) => EXIT_DATA,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "contagion", version, about = "Archimedean contagion model toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a CDS spread CSV into an aligned intensity panel.
    Ingest(IngestArgs),
    /// Fit (alpha, theta) to the pairwise taus of an intensity panel.
    Estimate(EstimateArgs),
    /// Extract the systemic intensity and run the line check.
    Diagnose(DiagnoseArgs),
    /// Refit on rolling windows.
    Rolling(RollingArgs),
    /// Simulate default times and optionally a synthetic intensity panel.
    Simulate(SimulateArgs),
    /// Kendall's tau of a trivariate nested Gumbel structure.
    HacTau(HacTauArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Align {
    Intersection,
    ForwardFill,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct IngestArgs {
    /// Spread CSV with header date,entity,spread_bps.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = contagion_core::data_io::DEFAULT_RECOVERY)]
    pub recovery: f64,
    #[arg(long, value_enum, default_value_t = Align::Intersection)]
    pub align: Align,
    /// Longest run of missing dates bridged by forward filling.
    #[arg(long, default_value_t = 5)]
    pub max_gap: usize,
    /// Affine adjustment a in a * mu + b.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Affine adjustment b in a * mu + b.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub shift: f64,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct FitArgs {
    /// Defaults to $CONTAGION_SEED, then 0.
    #[arg(long, env = "CONTAGION_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    /// quadratic or absolute.
    #[arg(long, default_value = "quadratic")]
    pub distance: Distance,
    #[arg(long, default_value_t = 50.0)]
    pub theta_max: f64,
    /// levels or differences.
    #[arg(long, default_value = "levels")]
    pub basis: TauBasis,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct EstimateArgs {
    /// Intensity CSV with header date,entity,intensity.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Parameter JSON whose alphas are held fixed; only theta is fitted.
    #[arg(long)]
    pub fix_alphas: Option<PathBuf>,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Parameter JSON (labels, alphas, theta), e.g. the output of estimate.
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// csv or svg.
    #[arg(long, default_value = "svg")]
    pub format: ScatterFormat,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct RollingArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 250)]
    pub window: usize,
    #[arg(long, default_value_t = 20)]
    pub step: usize,
    /// free or fixed-alpha.
    #[arg(long, default_value = "free")]
    pub mode: RollingMode,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct SimulateArgs {
    /// Number of entities; must match the length of --lambdas.
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub lambda0: f64,
    /// Comma-separated idiosyncratic rates.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambdas: Vec<f64>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, env = "CONTAGION_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a synthetic intensity panel with one replication per date.
    #[arg(long)]
    pub panel: bool,
    /// First date of the synthetic panel.
    #[arg(long, default_value = "2000-01-01")]
    pub start_date: chrono::NaiveDate,
}

#[derive(Debug, Args, serde::Serialize)]
pub struct HacTauArgs {
    #[arg(long)]
    pub theta: f64,
    #[arg(long)]
    pub phi: f64,
    /// Rates lambda_i,lambda_j,lambda_k.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambdas: Vec<f64>,
    /// inner or outer.
    #[arg(long = "case")]
    pub position: SystemicPosition,
    /// Absolute tolerance of the quadratures.
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    /// Optional directory for a copy of the result and a manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match commands::dispatch(cli.command, argv) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
