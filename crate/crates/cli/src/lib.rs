//! The `ebts` command-line tool.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure,
//! 4 infeasible model. A `run_manifest.json` is written next to the outputs
//! for every run that gets as far as creating its output directory.

mod commands;
mod failure;
mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use ebts_core::config::ClusterCount;

pub use failure::Failure;
pub use manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(name = "ebts", version, about = "Day-ahead scheduling of an electric boiler with thermal storage under temperature uncertainty")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Allow writing into a non-empty output directory.
    #[arg(long)]
    force: bool,
    /// Worker threads (defaults to the number of logical processors).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the forecast/actual temperature copula and write the model file.
    FitCopula {
        /// CSV with columns timestamp,forecast_c,actual_c.
        #[arg(long)]
        data: PathBuf,
        /// Use only heating-season records before this date.
        #[arg(long)]
        train_end: Option<NaiveDate>,
        /// Longest interval (hours) bridged by interpolation.
        #[arg(long, default_value_t = 6)]
        max_gap_hours: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Build temperature scenarios for one day and solve the bidding schedule.
    Schedule {
        #[arg(long)]
        model: PathBuf,
        /// Case file (TOML).
        #[arg(long)]
        config: PathBuf,
        /// CSV with columns hour,forecast_c.
        #[arg(long)]
        forecast: PathBuf,
        /// Date of the forecast day, used as a label.
        #[arg(long)]
        date: Option<NaiveDate>,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Plan on the point forecast only.
        #[arg(long)]
        deterministic: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Compare stochastic and deterministic plans on held-out days.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// CSV with columns timestamp,forecast_c,actual_c; complete days are used.
        #[arg(long)]
        test_days: PathBuf,
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Write a seeded synthetic temperature history and test days.
    SynthWeather {
        #[arg(long, default_value_t = 20)]
        n_test_days: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
struct ScenarioArgs {
    /// Conditional samples per day (overrides the case file).
    #[arg(long)]
    samples: Option<usize>,
    /// Number of scenarios, or `auto` for the elbow rule (overrides the case file).
    #[arg(long)]
    k: Option<ClusterCount>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    commands::dispatch(cli.command)
}
