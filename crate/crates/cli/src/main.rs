mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tailtrend::ingest::{DEFAULT_BLOCK_YEARS, DEFAULT_MAX_MISSING};
use tailtrend::{ErrorKind, Estimator, Family, YearWindow};

/// Trends in the probability of extreme events: estimation, tests,
/// simulation and station data ingestion.
#[derive(Parser)]
#[command(name = "tailtrend", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn ECA&D daily rainfall files into block panels and rain-day tables.
    Ingest(IngestArgs),
    /// Trend estimates at one k, one row per estimator.
    Estimate(EstimateArgs),
    /// Chi-squared tests of "no trend" over a grid of k.
    Test(TestArgs),
    /// All estimators and index estimates over a grid of k.
    Sweep(SweepArgs),
    /// Monte Carlo runs of the estimators on simulated panels.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

/// How to build blocks when the input is a raw daily file.
#[derive(Args)]
pub struct BlockArgs {
    /// Year range to use, as START:END.
    #[arg(long, default_value_t = YearWindow::default())]
    pub window: YearWindow,
    #[arg(long, default_value_t = DEFAULT_BLOCK_YEARS)]
    pub block_years: u32,
    /// A year with this many days lacking a valid value is incomplete.
    #[arg(long, default_value_t = DEFAULT_MAX_MISSING)]
    pub max_missing: u32,
}

#[derive(Args)]
pub struct PanelArgs {
    /// Panel JSON (from `ingest` or `simulate --emit-panel`) or an ECA&D daily file.
    pub input: PathBuf,
    #[command(flatten)]
    pub blocks: BlockArgs,
}

#[derive(Args)]
pub struct KGrid {
    /// Single k; overrides the range flags.
    #[arg(long, conflicts_with_all = ["k_min", "k_max", "k_step"])]
    pub k: Option<usize>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub k_step: Option<usize>,
}

#[derive(Args)]
pub struct IngestArgs {
    /// One or more station files.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Directory for the panel JSON, block CSV and rain-day table.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub blocks: BlockArgs,
    /// ECA&D station list, used for country and coordinates.
    #[arg(long)]
    pub stations: Option<PathBuf>,
}

#[derive(Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', default_values_t = Estimator::ALL)]
    pub estimators: Vec<Estimator>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[command(flatten)]
    pub grid: KGrid,
    #[arg(long, default_value_t = tailtrend::inference::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[command(flatten)]
    pub grid: KGrid,
    #[arg(long, value_delimiter = ',', default_values_t = Estimator::ALL)]
    pub estimators: Vec<Estimator>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Design file (JSON or TOML). Without it the design comes from the flags below.
    #[arg(long, conflicts_with_all = ["family", "gamma", "c", "n", "m", "replications"])]
    pub design: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[command(flatten)]
    pub grid: KGrid,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the panel of this replication as JSON instead of running the design.
    #[arg(long)]
    pub emit_panel: Option<usize>,
    /// No progress on standard error.
    #[arg(long, short)]
    pub quiet: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Failures raised by the CLI itself, tagged with their exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Input(String),
    Domain(String),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Input(m) | Failure::Domain(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<tailtrend::Error>() {
            return match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Input => 3,
                ErrorKind::Domain => 4,
            };
        }
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Usage(_) => 2,
                Failure::Input(_) => 3,
                Failure::Domain(_) => 4,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(args) => commands::ingest(&args),
        Command::Estimate(args) => commands::estimate(&args),
        Command::Test(args) => commands::test(&args),
        Command::Sweep(args) => commands::sweep(&args),
        Command::Simulate(args) => commands::simulate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
