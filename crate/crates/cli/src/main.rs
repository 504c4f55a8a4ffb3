//! Command-line interface for singularity-curve detection.
//!
//! Six subcommands cover the full workflow: `generate` synthesizes batched
//! point clouds around a known curve, `filter` selects high-density points,
//! `fit` produces detection-function coefficients, `trace` extracts the
//! fitted zero set as CSV or SVG, `pipeline` chains all of those into one
//! artifact directory, and `report` compares a fit against the exact
//! coefficients of a named curve.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid arguments or data,
//! 3 degenerate fit under `--strict`.

mod artifacts;
mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Degenerate(_) => 3,
        }
    }
}

impl From<singdetect::DataError> for CliError {
    fn from(err: singdetect::DataError) -> Self {
        match err {
            singdetect::DataError::Io(_) => CliError::Io(err.to_string()),
            _ => CliError::Validation(err.to_string()),
        }
    }
}

impl From<singdetect::SynthError> for CliError {
    fn from(err: singdetect::SynthError) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<singdetect::FilterError> for CliError {
    fn from(err: singdetect::FilterError) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<singdetect::FitError> for CliError {
    fn from(err: singdetect::FitError) -> Self {
        match err {
            singdetect::FitError::NotPsd { .. } | singdetect::FitError::ZeroCoefficients(_) => {
                CliError::Degenerate(err.to_string())
            }
            _ => CliError::Validation(err.to_string()),
        }
    }
}

impl From<singdetect::DiagnosticsError> for CliError {
    fn from(err: singdetect::DiagnosticsError) -> Self {
        CliError::Validation(err.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "singdetect",
    version,
    about = "Detect solution-singularity curves from unlabeled 2-D point clouds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic batched point cloud around a curve
    Generate(GenerateArgs),
    /// Run a density filter and write the kept-subset report
    Filter(FilterArgs),
    /// Fit detection-function coefficients to a point cloud
    Fit(FitArgs),
    /// Trace the zero set of a fitted model to CSV or SVG
    Trace(TraceArgs),
    /// Generate or load, filter, fit, and trace in one run
    Pipeline(PipelineArgs),
    /// Compare a fit against the exact coefficients of a named curve
    Report(ReportArgs),
}

/// Synthetic-data flags shared by `generate` and `pipeline`.
#[derive(Args, Debug, Clone)]
pub struct GenFlags {
    /// Curve: circle, lshape, xshape, semicircles, or poly:<file>
    #[arg(long)]
    pub curve: Option<String>,
    /// Domain as xmin,xmax,ymin,ymax
    #[arg(long)]
    pub domain: Option<String>,
    /// Number of refinement steps R (producing batches 0..=R)
    #[arg(long)]
    pub batches: Option<usize>,
    /// Side length of the batch-0 coarse grid
    #[arg(long)]
    pub grid_side: Option<usize>,
    /// Points accepted per refinement batch
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Tube half-width at batch 1
    #[arg(long)]
    pub tube_width: Option<f64>,
    /// Per-batch tube shrink factor q in (0, 1]
    #[arg(long)]
    pub decay: Option<f64>,
    /// Extra uniform points per batch, as a fraction of batch size
    #[arg(long)]
    pub outlier_fraction: Option<f64>,
    /// RNG seed
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Density-filter flags shared by `filter`, `fit`, and `pipeline`.
#[derive(Args, Debug, Clone)]
pub struct FilterFlags {
    /// Density filter: none, kde, or knn
    #[arg(long)]
    pub filter: Option<String>,
    /// Keep-threshold ratio gamma in (0, 1]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Neighbor count for the knn filter
    #[arg(long)]
    pub k: Option<usize>,
    /// KDE bandwidth: silverman or a positive number
    #[arg(long)]
    pub bandwidth: Option<String>,
}

/// Model flags shared by `fit` and `pipeline`.
#[derive(Args, Debug, Clone)]
pub struct FitFlags {
    /// Basis: poly:<n> or fourier:<J>:<M>
    #[arg(long)]
    pub basis: Option<String>,
    /// Weights: uniform, schedule:<b>, or sigmas:<csv>
    #[arg(long)]
    pub weights: Option<String>,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub gen: GenFlags,
    /// Output point file (.csv with columns x,y,batch, or .json)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct FilterArgs {
    /// Input point file (.csv or .json)
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub filter: FilterFlags,
    /// Output JSON report path
    #[arg(long, default_value = "filter.json")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct FitArgs {
    /// Input point file (.csv or .json)
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub filter: FilterFlags,
    #[command(flatten)]
    pub fit: FitFlags,
    /// Output JSON report path
    #[arg(long, default_value = "fit.json")]
    pub out: PathBuf,
    /// Also write a plain-text coefficient table here
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Exit with status 3 when the fit carries warnings
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args)]
pub struct TraceArgs {
    /// Fit report (fit.json) whose model is traced
    #[arg(long)]
    pub fit: PathBuf,
    /// Grid resolution per axis (defaults to the value in the fit report)
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Domain override as xmin,xmax,ymin,ymax
    #[arg(long)]
    pub domain: Option<String>,
    /// Output path; the .csv or .svg extension selects the format
    #[arg(long)]
    pub out: PathBuf,
    /// Point file drawn as a background layer (SVG output only)
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Filter report whose kept points are drawn as a layer (SVG only)
    #[arg(long)]
    pub kept: Option<PathBuf>,
}

#[derive(Args)]
pub struct PipelineArgs {
    /// JSON or TOML config file; flags override its keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input point file; omitted means generate synthetic data
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub gen: GenFlags,
    #[command(flatten)]
    pub filter: FilterFlags,
    #[command(flatten)]
    pub fit: FitFlags,
    /// Trace grid resolution per axis
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Directory receiving every artifact
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Exit with status 3 when the fit carries warnings
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Fit report (fit.json) to evaluate
    #[arg(long)]
    pub fit: PathBuf,
    /// Named curve with known exact coefficients
    #[arg(long)]
    pub exact: String,
    /// Write the comparison table here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Filter(args) => commands::filter(args),
        Command::Fit(args) => commands::fit(args),
        Command::Trace(args) => commands::trace(args),
        Command::Pipeline(args) => commands::pipeline(args),
        Command::Report(args) => commands::report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
