//! Command-line front end. `run` parses arguments, dispatches to a
//! subcommand and maps every failure to an exit code.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::ahp::{AhpError, WeightMethod, DEFAULT_CR_THRESHOLD, DEFAULT_SMOOTHING_FLOOR};
use crate::data_io::DataError;
use crate::scoring::{ScoringError, Strategy};
use crate::simulator::SimError;

pub use commands::SimulateConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_GATE: i32 = 3;

const FILE_CONTRACTS: &str = "\
File formats:
  history CSV   report_id,indicator_id,conforming
                conforming is true/false/1/0; (report_id, indicator_id) is unique.
  batch CSV     item_id,indicator_id,measured,standard,deviation_pct
                Give measured+standard or deviation_pct, never both. Indicators
                with variants use <indicator>_<variant>, e.g. dc_resistance_cu.
  rubric JSON   {\"id\", \"score_map\"?, \"indicators\": [...], \"rubrics\": [...]}
                Omit --rubric to use the built-in low-voltage power cable rubric.
  matrix JSON   {\"indicators\": [ids], \"matrix\": [[1, 3, \"1/5\"], ...]}
  weights JSON  written by `weights`; accepted by `score --weights`.
  report JSON   written by `score` and `sample`; accepted by `sample --report`.

Exit codes: 0 ok, 1 input or validation error, 2 I/O error, 3 consistency gate.
Set SOURCE_DATE_EPOCH to pin the provenance timestamp.";

#[derive(Debug, Parser)]
#[command(name = "ahp-sampler", version, about = "AHP-weighted quality scoring and sampling for incoming inspection")]
#[command(after_long_help = FILE_CONTRACTS)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive indicator weights from inspection history or a judgment matrix.
    #[command(after_long_help = FILE_CONTRACTS)]
    Weights(WeightsArgs),
    /// Grade and score every item of a batch.
    #[command(after_long_help = FILE_CONTRACTS)]
    Score(ScoreArgs),
    /// Build a sampling plan from a scored report or a batch.
    #[command(after_long_help = FILE_CONTRACTS)]
    Sample(SampleArgs),
    /// Compare AHP and random sampling on synthetic batches.
    #[command(after_long_help = SIMULATE_HELP)]
    Simulate(SimulateArgs),
    /// Estimate the random consistency index by Monte Carlo.
    Ri(RiArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// Rubric JSON; the built-in cable rubric when omitted.
    #[arg(long, value_name = "PATH")]
    pub rubric: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Consistency ratio must be strictly below this value.
    #[arg(long, value_name = "F", default_value_t = DEFAULT_CR_THRESHOLD)]
    pub cr_threshold: f64,
    /// Floor applied to nonconformity rates before forming ratios.
    #[arg(long, value_name = "F", default_value_t = DEFAULT_SMOOTHING_FLOOR)]
    pub smoothing_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum MethodArg {
    #[default]
    Eigenvector,
    GeometricMean,
    SumProduct,
}

impl From<MethodArg> for WeightMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Eigenvector => WeightMethod::Eigenvector,
            MethodArg::GeometricMean => WeightMethod::GeometricMean,
            MethodArg::SumProduct => WeightMethod::SumProduct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum StrategyArg {
    #[default]
    Ahp,
    Random,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Ahp => Strategy::AhpAscending,
            StrategyArg::Random => Strategy::Random,
        }
    }
}

/// Where weights come from when scoring a batch.
#[derive(Debug, Args, Clone)]
pub struct WeightInputArgs {
    /// Weights JSON produced by `weights`.
    #[arg(long, value_name = "PATH", conflicts_with = "history")]
    pub weights: Option<PathBuf>,
    /// History CSV; weights are derived in the same run.
    #[arg(long, value_name = "PATH")]
    pub history: Option<PathBuf>,
    /// Weight method used with --history.
    #[arg(long, value_enum, default_value_t)]
    pub method: MethodArg,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    /// History CSV.
    #[arg(long, value_name = "PATH", required_unless_present = "matrix", conflicts_with = "matrix")]
    pub history: Option<PathBuf>,
    /// Hand-authored judgment matrix JSON. Exits 3 if it fails the consistency test.
    #[arg(long, value_name = "PATH")]
    pub matrix: Option<PathBuf>,
    /// Method whose result becomes the selected weights. All three are reported.
    #[arg(long, value_enum, default_value_t)]
    pub method: MethodArg,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Batch CSV.
    #[arg(long, value_name = "PATH")]
    pub batch: PathBuf,
    #[command(flatten)]
    pub weights: WeightInputArgs,
    /// Also attach an AHP-ascending plan selecting K items.
    #[arg(long, value_name = "K")]
    pub k: Option<usize>,
    /// Append per-indicator conformity of every item to this history CSV.
    #[arg(long, value_name = "PATH")]
    pub append_history: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Scored report JSON from `score`.
    #[arg(long, value_name = "PATH", required_unless_present = "batch", conflicts_with = "batch")]
    pub report: Option<PathBuf>,
    /// Batch CSV, scored in this run (needs --weights or --history).
    #[arg(long, value_name = "PATH")]
    pub batch: Option<PathBuf>,
    #[command(flatten)]
    pub weights: WeightInputArgs,
    /// Number of items to send for testing.
    #[arg(long, value_name = "K")]
    pub k: usize,
    #[arg(long, value_enum, default_value_t)]
    pub strategy: StrategyArg,
    /// Seed for --strategy random; generated and recorded when omitted.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

const SIMULATE_HELP: &str = "\
Config JSON:
  {\"batch\": {\"batch_size\": 100, \"planted_bad\": 10, \"regime\": \"defective\",
             \"tainted_indicators\": 1, \"default_noise\": {\"open_band_span\": 20,
             \"defect_span\": 5}, \"noise\": {}, \"variants\": {}},
   \"k\": 10, \"trials\": 1000, \"seed\": 7}
  regime is marginal (lowest conforming band) or defective (nonconforming).

Output CSV: trial,strategy,k,captured,capture_rate, then a `# summary {json}` line.
Weights default to uniform over the rubric indicators.";

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Simulation config JSON.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Weights JSON produced by `weights`.
    #[arg(long, value_name = "PATH")]
    pub weights: Option<PathBuf>,
    /// Overrides the config seed; generated and recorded when both are absent.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct RiArgs {
    /// Matrix order.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Generated and recorded when omitted.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Io(String),
    Gate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Io(_) => EXIT_IO,
            CliError::Gate(_) => EXIT_GATE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Io(m) | CliError::Gate(m) => m,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<AhpError> for CliError {
    fn from(e: AhpError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Runs the tool and returns its exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Weights(a) => commands::weights(a),
        Command::Score(a) => commands::score(a),
        Command::Sample(a) => commands::sample(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Ri(a) => commands::ri(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_valid() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["ahp-sampler", "weights"]), EXIT_INPUT);
        assert_eq!(run(["ahp-sampler", "bogus"]), EXIT_INPUT);
        assert_eq!(run(["ahp-sampler", "sample", "--report", "x", "--batch", "y", "--k", "1"]), EXIT_INPUT);
    }

    #[test]
    fn help_mentions_contracts() {
        let help = Cli::command().find_subcommand_mut("score").unwrap().render_long_help().to_string();
        assert!(help.contains("item_id,indicator_id,measured,standard,deviation_pct"));
        assert!(help.contains("--append-history"));
    }
}
