//! Command-line workflows over the `dfls` library: analysis, stability
//! certification, simulation, engineering and reproduction of the worked
//! examples.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod reproduce;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{load_config, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Debug, Parser)]
#[command(name = "dfls", version, about = "Decoherence-free subsystems of linear quantum systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the DF subsystem, its Hamiltonian and the decoupling verdict.
    Analyze(RunArgs),
    /// Decoupling verdict only.
    Stability(RunArgs),
    /// Propagate means and covariances over the configured time grid (CSV).
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Evolve initial covariances that violate the uncertainty relation.
        #[arg(long)]
        allow_unphysical: bool,
    },
    /// Solve the DF engineering condition of a scenario and re-analyze.
    Engineer(RunArgs),
    /// Recompute the worked examples and compare against published values.
    Reproduce {
        /// VA, VB, VIA, VIB or all.
        #[arg(long, default_value = "all")]
        example: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub tol_rank: Option<f64>,
    #[arg(long)]
    pub tol_margin: Option<f64>,
    /// Output file: JSON report, or CSV for `simulate`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

/// What a command printed, and how the process should exit.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn failed(stdout: String, err: &CliError) -> Self {
        Self {
            stdout,
            stderr: format!("error: {err}\n"),
            code: err.exit_code(),
        }
    }
}

fn override_tolerance(name: &str, value: Option<f64>, slot: &mut f64) -> Result<(), CliError> {
    if let Some(v) = value {
        if !(v > 0.0 && v < 1.0) {
            return Err(CliError::Validation(format!("--{name} must lie in (0, 1), got {v}")));
        }
        *slot = v;
    }
    Ok(())
}

fn load(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut config = load_config(&args.config)?;
    override_tolerance("tol-rank", args.tol_rank, &mut config.tolerances.tol_rank)?;
    override_tolerance("tol-margin", args.tol_margin, &mut config.tolerances.tol_margin)?;
    Ok(config)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn report_path(args: &RunArgs, config: &RunConfig) -> Option<PathBuf> {
    args.out.clone().or_else(|| config.output.report.clone())
}

fn analyze(args: &RunArgs, stability_only: bool) -> Result<Outcome, (String, CliError)> {
    let fail = |e: CliError| (String::new(), e);
    let config = load(args).map_err(fail)?;
    let report = commands::analyze(&config).map_err(fail)?;
    if let Some(path) = report_path(args, &config) {
        write_file(&path, &report.to_json()).map_err(fail)?;
    }
    let stdout = match (args.format, stability_only) {
        (Format::Machine, false) => report.to_json() + "\n",
        (Format::Machine, true) => serde_json::to_string_pretty(&report.stability).expect("serializes") + "\n",
        (Format::Text, false) => report.to_text(),
        (Format::Text, true) => match &report.stability {
            Some(s) => report::stability_text(s),
            None => String::new(),
        },
    };
    if report.df_modes == 0 {
        return Err((stdout, CliError::NoDfSubsystem));
    }
    Ok(Outcome { stdout, ..Outcome::default() })
}

fn simulate(args: &RunArgs, allow_unphysical: bool) -> Result<Outcome, CliError> {
    let config = load(args)?;
    let csv = commands::simulate(&config, allow_unphysical)?;
    match args.out.clone().or_else(|| config.output.csv.clone()) {
        Some(path) => {
            write_file(&path, &csv)?;
            Ok(Outcome {
                stdout: format!("wrote {} rows to {}\n", csv.lines().count() - 1, path.display()),
                ..Outcome::default()
            })
        }
        None => Ok(Outcome { stdout: csv, ..Outcome::default() }),
    }
}

fn engineer(args: &RunArgs) -> Result<Outcome, CliError> {
    let config = load(args)?;
    let result = commands::engineer(&config)?;
    let json = serde_json::to_string_pretty(&result).expect("serializes");
    if let Some(path) = report_path(args, &config) {
        write_file(&path, &json)?;
    }
    let stdout = match args.format {
        Format::Text => result.to_text(),
        Format::Machine => json + "\n",
    };
    Ok(Outcome { stdout, ..Outcome::default() })
}

fn reproduce(example: &str, format: Format) -> Result<Outcome, (String, CliError)> {
    let rows = reproduce::run(example).map_err(|e| (String::new(), e))?;
    let stdout = match format {
        Format::Text => reproduce::to_text(&rows),
        Format::Machine => serde_json::to_string_pretty(&rows).expect("serializes") + "\n",
    };
    match reproduce::verdict(&rows) {
        Ok(()) => Ok(Outcome { stdout, ..Outcome::default() }),
        Err(e) => Err((stdout, e)),
    }
}

/// Runs one command to completion; nothing is printed here.
pub fn execute(command: &Command) -> Outcome {
    let result = match command {
        Command::Analyze(args) => analyze(args, false),
        Command::Stability(args) => analyze(args, true),
        Command::Simulate { run, allow_unphysical } => {
            simulate(run, *allow_unphysical).map_err(|e| (String::new(), e))
        }
        Command::Engineer(args) => engineer(args).map_err(|e| (String::new(), e)),
        Command::Reproduce { example, format } => reproduce(example, *format),
    };
    result.unwrap_or_else(|(stdout, err)| Outcome::failed(stdout, &err))
}
