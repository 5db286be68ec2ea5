//! `varcomp` — variance components from the command line.
//!
//! Subcommands: `simulate` (synthetic datasets), `estimate` (fit a
//! model to a CSV file, optionally chunked), `compare` (random-sizes
//! vs fixed-sizes one-way estimators) and `bench` (timing of full vs
//! chunked estimation).
//!
//! Exit codes: 0 success, 1 data or estimation error, 2 usage error.

mod bench;
mod compare;
pub mod csv_io;
pub mod error;
mod estimate;
pub mod report;
mod simulate;

use std::ffi::OsString;

use clap::{Parser, Subcommand, ValueEnum};

use crate::csv_io::{GroupedSchema, RatingsSchema};
use crate::error::CliError;

/// Which model to simulate from or fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    /// One-way random effects with random group sizes
    OneWay,
    /// Group mean depends linearly on group size
    Famsize,
    /// Group-level random regressors
    Regression,
    /// Two crossed random effects on a sparse grid
    Crossed,
}

impl ModelArg {
    pub fn name(self) -> &'static str {
        match self {
            ModelArg::OneWay => "one-way",
            ModelArg::Famsize => "famsize",
            ModelArg::Regression => "regression",
            ModelArg::Crossed => "crossed",
        }
    }

    pub fn is_grouped(self) -> bool {
        !matches!(self, ModelArg::Crossed)
    }
}

/// CSV column-name mapping, shared by every data-reading subcommand.
#[derive(Debug, Clone, clap::Args)]
pub struct SchemaArgs {
    /// Group label column (grouped models)
    #[arg(long, default_value = "group")]
    pub group_col: String,
    /// Response value column [default: 'y' for grouped data, 'value' for ratings]
    #[arg(long)]
    pub value_col: Option<String>,
    /// Comma-separated regressor columns (default: every column named x1, x2, ...)
    #[arg(long, value_delimiter = ',')]
    pub regressor_cols: Option<Vec<String>>,
    /// Row label column (crossed model)
    #[arg(long, default_value = "row")]
    pub row_col: String,
    /// Column label column (crossed model)
    #[arg(long, default_value = "col")]
    pub col_col: String,
    /// Timestamp column giving arrival order (crossed model); file order when absent
    #[arg(long)]
    pub timestamp_col: Option<String>,
}

impl SchemaArgs {
    pub fn grouped_schema(&self) -> GroupedSchema {
        GroupedSchema {
            group_col: self.group_col.clone(),
            value_col: self.value_col.clone().unwrap_or_else(|| "y".into()),
            regressor_cols: self.regressor_cols.clone(),
        }
    }

    pub fn ratings_schema(&self) -> RatingsSchema {
        RatingsSchema {
            row_col: self.row_col.clone(),
            col_col: self.col_col.clone(),
            value_col: self.value_col.clone().unwrap_or_else(|| "value".into()),
            timestamp_col: self.timestamp_col.clone(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "varcomp",
    version,
    about = "Method-of-moments variance components for random effects models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it as CSV
    Simulate(simulate::SimulateArgs),
    /// Fit a model to a CSV dataset
    Estimate(estimate::EstimateArgs),
    /// Fit the random-sizes and fixed-sizes one-way estimators side by side
    Compare(compare::CompareArgs),
    /// Time full-data estimation against chunked estimation
    Bench(bench::BenchArgs),
}

/// Shared guard for count-valued flags.
pub(crate) fn check_positive(name: &str, value: usize) -> Result<(), CliError> {
    if value == 0 {
        return Err(CliError::Usage(format!("{name} must be at least 1")));
    }
    Ok(())
}

/// Parse `argv`, run the selected subcommand, and return the process
/// exit code: 0 success, 1 data or estimation error, 2 usage error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // clap prints help/version to stdout (exit 0) and usage
            // errors to stderr (exit 2).
            let _ = err.print();
            return err.exit_code();
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate::run(&args),
        Command::Estimate(args) => estimate::run(&args),
        Command::Compare(args) => compare::run(&args),
        Command::Bench(args) => bench::run(&args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprint!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprint!(": {cause}");
                source = cause.source();
            }
            eprintln!();
            err.exit_code()
        }
    }
}
