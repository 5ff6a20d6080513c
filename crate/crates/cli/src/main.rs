//! `sstest`: spatial-sign location tests on CSV data, and simulation experiments.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "sstest", version, about = "High-dimensional spatial-sign location tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Test H0: theta = 0 on one sample (rows = observations).
    Test {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Test for a zero mean difference between two paired samples.
    Paired {
        #[command(flatten)]
        data: DataArgs,
        /// Second sample, same shape as --input.
        #[arg(long, conflicts_with = "split")]
        paired_with: Option<PathBuf>,
        /// Input holds 2p columns: the first p are paired with the last p.
        #[arg(long)]
        split: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a size (or power, if the plan has a `power` grid) experiment.
    Simulate {
        /// JSON experiment plan.
        #[arg(long)]
        plan: PathBuf,
        /// Override the number of replications.
        #[arg(long)]
        replications: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Correlation of the normalized max-type and sum-type statistics under the null.
    Independence {
        /// JSON experiment plan; every scenario must be null.
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        replications: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV file, one observation per row; a non-numeric first row is a header.
    #[arg(long)]
    input: PathBuf,
    /// Input holds one observation per column.
    #[arg(long)]
    transpose: bool,
}

#[derive(Args, Debug)]
struct CommonArgs {
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated subset of SS-MAX,SS-SUM,SS-CC,MAX,SUM,COM.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Convergence tolerance for both estimating equations.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Base seed; scenario k of a plan uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Report destination (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    Exact,
    SharedDhat,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
