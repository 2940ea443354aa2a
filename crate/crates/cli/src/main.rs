//! `relutil`: runs the portfolio experiments and writes their tables.
//!
//! Exit status: 0 success, 1 internal error, 2 usage error, 3 dataset absent
//! (the run is skipped).

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use relutil_core::experiments::{run_experiment, ExperimentId};
use relutil_core::Error;
use serde_json::{Map, Value};

const EXIT_INTERNAL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_SKIPPED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "relutil", version, about = "Relative-utility portfolio experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Average optimal risky weight, ordinary vs relative power utility.
    Table1(Common),
    /// Optimal-weight and true-utility samples for three sample sizes.
    Fig1(Common),
    /// Log-utility GDSEG runs on a NYSE dataset.
    NyseLog(Common),
    /// Best-of-k GDSEG portfolios per alpha on a NYSE dataset.
    Table4(Common),
    /// Annual wealth statistics under the estimated Black-Scholes model.
    Table5(Common),
    /// Relative-utility portfolios on simulated NYSE-like trajectories.
    Fig2(Common),
    /// Evaluate the high-probability bounds.
    BoundReport(Common),
    /// Generate a returns matrix from a market spec.
    Simulate(Common),
    /// Solve one empirical utility maximization on a returns file.
    Optimize(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON file whose keys override the default parameters.
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// Master seed.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "results")]
    out: PathBuf,
    /// Returns file (whitespace-separated price relatives).
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Ticker names for the returns file, in column order.
    #[arg(long, value_name = "PATH")]
    tickers: Option<PathBuf>,
    /// Desk-scale preset (fewer realizations, smaller Monte-Carlo samples).
    #[arg(long)]
    fast: bool,
}

impl Command {
    fn split(&self) -> (ExperimentId, &Common) {
        match self {
            Command::Table1(c) => (ExperimentId::Table1, c),
            Command::Fig1(c) => (ExperimentId::Fig1, c),
            Command::NyseLog(c) => (ExperimentId::NyseLog, c),
            Command::Table4(c) => (ExperimentId::Table4, c),
            Command::Table5(c) => (ExperimentId::Table5, c),
            Command::Fig2(c) => (ExperimentId::Fig2, c),
            Command::BoundReport(c) => (ExperimentId::BoundReport, c),
            Command::Simulate(c) => (ExperimentId::Simulate, c),
            Command::Optimize(c) => (ExperimentId::Optimize, c),
        }
    }
}

enum Failure {
    Usage(String),
    Skipped(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::DataMissing(path) => Failure::Skipped(path.display().to_string()),
            Error::InvalidConfig(_) | Error::Json(_) => Failure::Usage(e.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

fn overlays(common: &Common) -> Result<Vec<Value>, Failure> {
    let mut layers = Vec::new();
    if let Some(path) = &common.spec {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let spec: Value =
            serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        layers.push(spec);
    }
    let mut flags = Map::new();
    if let Some(seed) = common.seed {
        flags.insert("seed".into(), seed.into());
    }
    if let Some(data) = &common.data {
        flags.insert("data".into(), data.to_string_lossy().into_owned().into());
    }
    if let Some(tickers) = &common.tickers {
        flags.insert("tickers".into(), tickers.to_string_lossy().into_owned().into());
    }
    layers.push(Value::Object(flags));
    Ok(layers)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let (id, common) = cli.command.split();
    let layers = overlays(common)?;
    let start = Instant::now();
    let output = run_experiment(id, common.fast, &layers)?;
    let elapsed = start.elapsed();
    let written = output.write_to(&common.out)?;
    println!("{id}");
    for line in &output.summary {
        println!("{line}");
    }
    for path in &written {
        println!("wrote {}", path.display());
    }
    println!("runtime {:.2} s", elapsed.as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Skipped(path)) => {
            println!("skipped: dataset absent ({path})");
            ExitCode::from(EXIT_SKIPPED)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
