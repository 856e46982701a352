//! `ncca`: synthesize paired views, train CCA / PLCCA / NCCA models, project
//! new data, evaluate total correlation and run the built-in benchmark.

mod bench;
mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ncca_core::linalg::PcaDim;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ncca", version, about = "Linear, partially linear and nonparametric CCA")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic paired dataset.
    Synth(SynthArgs),
    /// Fit a model on paired training views.
    Train(TrainArgs),
    /// Project one view through a fitted model.
    Project(ProjectArgs),
    /// Total canonical correlation between two projection files.
    Eval(EvalArgs),
    /// Run the spiral and gaussian benchmark suites.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Gaussian,
    Spiral,
    Identical,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Canonical correlations of the gaussian pair.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rho: Option<Vec<f64>>,
    /// Standard deviation of the spiral noise.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Number of spiral turns.
    #[arg(long)]
    pub turns: Option<f64>,
    /// Width of the identical views.
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cca,
    Plcca,
    Ncca,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sigma {
    Auto,
    Value(f64),
}

fn parse_sigma(s: &str) -> Result<Sigma, String> {
    if s == "auto" {
        return Ok(Sigma::Auto);
    }
    s.parse::<f64>()
        .map(Sigma::Value)
        .map_err(|_| format!("expected a number or `auto`, got `{s}`"))
}

fn parse_pca(s: &str) -> Result<PcaDim, String> {
    if s.contains(['.', 'e', 'E']) {
        s.parse::<f64>()
            .map(PcaDim::Fraction)
            .map_err(|_| format!("expected a component count or fraction, got `{s}`"))
    } else {
        s.parse::<usize>()
            .map(PcaDim::Components)
            .map_err(|_| format!("expected a component count or fraction, got `{s}`"))
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long)]
    pub dim: usize,
    /// First-view bandwidth, or `auto` for a fraction of the mean norm.
    #[arg(long, value_parser = parse_sigma)]
    pub sigma_x: Option<Sigma>,
    /// Second-view bandwidth, or `auto`.
    #[arg(long, value_parser = parse_sigma)]
    pub sigma_y: Option<Sigma>,
    /// Fraction of the mean sample norm used by `auto` bandwidths.
    #[arg(long)]
    pub sigma_frac: Option<f64>,
    /// Neighbors kept per point.
    #[arg(long)]
    pub knn: Option<usize>,
    /// PCA on the first view: a component count or a fraction of the width.
    #[arg(long, value_parser = parse_pca)]
    pub pca_x: Option<PcaDim>,
    #[arg(long, value_parser = parse_pca)]
    pub pca_y: Option<PcaDim>,
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Seed of the randomized SVD.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub view: u8,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub proj1: PathBuf,
    #[arg(long)]
    pub proj2: PathBuf,
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub ridge: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Spiral training size; the gaussian suite uses twenty times as many.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = bench::DEFAULT_SEED)]
    pub seed: u64,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("NCCA_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::usage(format!("NCCA_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot configure {threads} worker threads: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Synth(a) => commands::synth(&a),
        Command::Train(a) => commands::train(&a),
        Command::Project(a) => commands::project(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Bench(a) => bench::run(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
