//! `handoff` command-line tool.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 domain failure
//! (training did not converge, verification disagreed with the table).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "handoff", version, about = "Neural-network handoff decision simulator")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario JSON file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Network weights JSON file.
    #[arg(long, global = true)]
    weights: Option<PathBuf>,

    /// Seed for training and simulation; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    dump_config: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the network on the decision table and write its weights.
    Train {
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Check a weights file against the decision table.
    Verify,
    /// Make a single handoff decision.
    Decide {
        /// Serving RSS estimate, dBm.
        #[arg(long, allow_hyphen_values = true)]
        rss_s: f64,
        /// Target RSS estimate, dBm.
        #[arg(long, allow_hyphen_values = true)]
        rss_t: f64,
        /// Serving traffic intensity, Erlang/channel.
        #[arg(long, allow_hyphen_values = true)]
        ti_s: f64,
        /// Target traffic intensity, Erlang/channel.
        #[arg(long, allow_hyphen_values = true)]
        ti_t: f64,
    },
    /// Run Monte Carlo trajectories and write a per-run summary CSV.
    Simulate {
        #[arg(long)]
        runs: Option<usize>,
        /// Decision trace of the first run.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Raw RSS of both links for the first run.
        #[arg(long)]
        signal_trace: Option<PathBuf>,
        /// Raw and smoothed serving-link RSS for the first run.
        #[arg(long)]
        estimate_trace: Option<PathBuf>,
    },
    /// Average handoff counts over a hysteresis x threshold grid.
    Sweep {
        /// Hysteresis margins in dB, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
              default_value = "0,2,4,6,8,10")]
        hysteresis: Vec<f64>,
        /// Thresholds in dBm, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
              default_value = "-80,-85,-90")]
        threshold: Vec<f64>,
        #[arg(long)]
        runs: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli.common, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {:#}", failure.error);
            ExitCode::from(failure.code)
        }
    }
}
