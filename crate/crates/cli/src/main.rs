//! `mfd`: simulate scans, build association graphs, train, calibrate and evaluate.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "mfd", version, about = "Graph link-prediction multi-frame radar detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run seed; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate scan windows into a directory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of windows.
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Build labeled association graphs into `<out>/graphs.json`.
    BuildGraphs {
        #[command(flatten)]
        common: Common,
        /// Directory of simulated windows; new windows are simulated when absent.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Train a network on `<data>/graphs.json`.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// Store parameters as base64 instead of decimal.
        #[arg(long)]
        base64: bool,
    },
    /// Calibrate gamma2, kappa and the NCI threshold.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Monte-Carlo detection curves into `<out>/report.json` and `<out>/curves.csv`.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        calibration: PathBuf,
    },
    /// Permutation importance on the validation graphs of `<data>`.
    Importance {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Features to permute (SNR, DC, CI, RDM, STC, DCD); all when omitted.
        #[arg(long, value_delimiter = ',')]
        feature: Vec<String>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        /// Restrict to graphs with this target SNR.
        #[arg(long)]
        snr: Option<f64>,
    },
    /// Merge evaluation reports into one curves CSV.
    Report {
        #[arg(long)]
        out: PathBuf,
        /// Report JSON files written by `eval`.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if commands::is_config_error(&e) { 2 } else { 1 })
        }
    }
}
