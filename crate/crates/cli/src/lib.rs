//! The `ovmil` command line: preprocessing, training, tuning, evaluation,
//! comparison and heatmap rendering as subcommands of one executable.
//!
//! Settings resolve in the order defaults < preset < `--config` file < flags.
//! Every command writes the resolved settings next to its outputs.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 I/O failure, 64 usage or
//! configuration error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;

pub use error::{CliError, EXIT_IO, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "ovmil", version, about = "Slide-level ovarian carcinoma subtyping from patch-feature bags")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Master random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel stages [default: logical CPUs].
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `key=value` settings file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment, stain-normalise or augment PNG tiles.
    Preprocess(commands::preprocess::PreprocessArgs),
    /// Cross-validated training with ensemble prediction on hold-out sets.
    Train(commands::train::TrainArgs),
    /// Iterative grid search over the tuning schedule.
    Tune(commands::tune::TuneArgs),
    /// Bootstrap metric reports from prediction CSVs.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Paired t-tests with FDR adjustment across run directories.
    Compare(commands::compare::CompareArgs),
    /// Attention heatmap from a checkpoint and a feature bag.
    Heatmap(commands::heatmap::HeatmapArgs),
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match cli.command {
        Command::Preprocess(a) => commands::preprocess::run(g, a),
        Command::Train(a) => commands::train::run(g, a),
        Command::Tune(a) => commands::tune::run(g, a),
        Command::Evaluate(a) => commands::evaluate::run(g, a),
        Command::Compare(a) => commands::compare::run(g, a),
        Command::Heatmap(a) => commands::heatmap::run(g, a),
    }
}
