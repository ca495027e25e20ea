//! `qensemble` command-line tool.
//!
//! Every command resolves its configuration from flags laid over an optional JSON
//! config file and echoes that configuration in its output. Exit codes: 0 on success,
//! 1 for domain or runtime errors, 2 for usage errors.

mod commands;
mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(anyhow::Error),
}

impl From<qensemble::Error> for CliError {
    fn from(e: qensemble::Error) -> Self {
        CliError::Domain(e.into())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Domain(e)
    }
}

#[derive(Parser)]
#[command(
    name = "qensemble",
    version,
    about = "Quantum bagging ensemble on a statevector simulator"
)]
struct Cli {
    /// JSON file with defaults for the command (flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; required with `--format csv`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Classify one test vector with a single training point.
    Classify(commands::ClassifyFlags),
    /// Run the ensemble on a CSV training set.
    Ensemble(commands::EnsembleFlags),
    /// Per-classifier probabilities, their average and the ensemble value on small datasets.
    Toy(commands::ToyFlags),
    /// Expected ensemble error over a grid of model errors, correlations and sizes.
    Theory(commands::TheoryFlags),
    /// Repeated Gaussian benchmark over ensemble sizes.
    Benchmark(commands::BenchmarkFlags),
    /// Benchmark grid over increasing class spread.
    Sweep(commands::SweepFlags),
}

pub type CsvWriter = Box<dyn FnOnce(&mut dyn Write) -> anyhow::Result<()>>;

/// Result of a command: the JSON document and, for tabular commands, a CSV writer.
pub struct Output {
    pub json: Value,
    pub csv: Option<CsvWriter>,
}

impl Output {
    pub fn json(json: Value) -> Self {
        Self { json, csv: None }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = |name: &str| config::load_file(cli.config.as_deref(), name);
    let output = match &cli.command {
        Command::Classify(f) => commands::classify(config::merge(f, file("classify")?)?)?,
        Command::Ensemble(f) => commands::ensemble(config::merge(f, file("ensemble")?)?)?,
        Command::Toy(f) => commands::toy(config::merge(f, file("toy")?)?)?,
        Command::Theory(f) => commands::theory(config::merge(f, file("theory")?)?)?,
        Command::Benchmark(f) => commands::benchmark(config::merge(f, file("benchmark")?)?)?,
        Command::Sweep(f) => commands::sweep(config::merge(f, file("sweep")?)?)?,
    };
    emit(output, cli.format, cli.out.as_deref())
}

fn emit(output: Output, format: Format, out: Option<&Path>) -> Result<(), CliError> {
    match format {
        Format::Json => match out {
            Some(path) => write_file(path, |w| {
                Ok(serde_json::to_writer_pretty(&mut *w, &output.json)?)
            }),
            None => {
                let mut stdout = io::stdout().lock();
                let written = serde_json::to_writer_pretty(&mut stdout, &output.json)
                    .map_err(io::Error::from)
                    .and_then(|()| writeln!(stdout));
                match written {
                    // a closed pipe (e.g. `| head`) is not a failure
                    Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
                        Err(anyhow::Error::from(e).into())
                    }
                    _ => Ok(()),
                }
            }
        },
        Format::Csv => {
            let Some(path) = out else {
                return Err(CliError::Usage("--format csv needs --out <path>".into()));
            };
            let Some(csv) = output.csv else {
                return Err(CliError::Usage("this command has no CSV output".into()));
            };
            write_file(path, csv)?;
            let echo = json!({ "config": output.json["config"], "out": path });
            println!(
                "{}",
                serde_json::to_string_pretty(&echo).map_err(anyhow::Error::from)?
            );
            Ok(())
        }
    }
}

fn write_file(
    path: &Path,
    f: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> Result<(), CliError> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush()
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
