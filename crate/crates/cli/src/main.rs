//! Batch command-line front end: state preparation, exact simulation,
//! Monte Carlo runs, analysis, phase sweeps, and calibration.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error.

mod commands;
mod manifest;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "npi",
    version,
    about = "Nonlocal polarization interferometer toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output path; stdout when omitted (mc --emit both needs a path prefix)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// RNG seed for simulation commands
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Suppress informational messages on stderr
    #[arg(long, global = true)]
    quiet: bool,

    /// Manifest path (defaults to <out>.manifest.json when --out is given)
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a two-photon polarization state file
    State(commands::state::StateArgs),
    /// Exact coincidence probabilities for a state in a given configuration
    Simulate(commands::simulate::SimulateArgs),
    /// Monte Carlo detection: coincidence counts and/or timestamp streams
    Mc(commands::mc::McArgs),
    /// Analyze counts, timestamps, or exact tables into a report
    Analyze(commands::analyze::AnalyzeArgs),
    /// Sweep a state-family phase and tabulate the recovered observable
    Sweep(commands::sweep::SweepArgs),
    /// Fit per-channel relative efficiencies from an unentangled-source run
    Calibrate(commands::calibrate::CalibrateArgs),
}

/// Error that should exit with the usage code rather than the data code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Shared output plumbing: payload destination, seed, manifest sidecar.
pub struct RunContext {
    out: Option<PathBuf>,
    pub seed: u64,
    seed_given: bool,
    pub quiet: bool,
    manifest_path: Option<PathBuf>,
}

impl RunContext {
    pub fn out(&self) -> Option<&Path> {
        self.out.as_deref()
    }

    pub fn require_out(&self, why: &str) -> anyhow::Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| usage(format!("--out is required {why}")))
    }

    pub fn info(&self, message: &str) {
        if !self.quiet {
            eprintln!("npi: {message}");
        }
    }

    /// Write the payload to --out or stdout. Returns the path written, if any.
    pub fn emit(&self, payload: &str) -> anyhow::Result<Option<PathBuf>> {
        match &self.out {
            Some(path) => {
                let text = if payload.ends_with('\n') {
                    payload.to_string()
                } else {
                    format!("{payload}\n")
                };
                std::fs::write(path, text)?;
                Ok(Some(path.clone()))
            }
            None => {
                println!("{payload}");
                Ok(None)
            }
        }
    }

    /// Write the manifest sidecar describing this run.
    pub fn finish(
        &self,
        command: &str,
        args: Vec<String>,
        inputs: Vec<PathBuf>,
        outputs: Vec<PathBuf>,
        seed: Option<u64>,
    ) -> anyhow::Result<()> {
        self.finish_at(None, command, args, inputs, outputs, seed)
    }

    /// Like [`finish`], but with an explicit default manifest anchor for
    /// commands that write several files under one path prefix.
    pub fn finish_at(
        &self,
        anchor: Option<PathBuf>,
        command: &str,
        args: Vec<String>,
        inputs: Vec<PathBuf>,
        outputs: Vec<PathBuf>,
        seed: Option<u64>,
    ) -> anyhow::Result<()> {
        let manifest_path = match (&self.manifest_path, anchor, outputs.first()) {
            (Some(path), _, _) => path.clone(),
            (None, Some(anchor), _) => anchor,
            (None, None, Some(first)) => {
                let mut name = first.as_os_str().to_owned();
                name.push(".manifest.json");
                PathBuf::from(name)
            }
            (None, None, None) => return Ok(()),
        };
        let manifest = RunManifest::new(command, args, inputs, &outputs, seed);
        manifest.write(&manifest_path)?;
        Ok(())
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = RunContext {
        out: cli.out,
        seed: cli.seed.unwrap_or(0),
        seed_given: cli.seed.is_some(),
        quiet: cli.quiet,
        manifest_path: cli.manifest,
    };
    let _ = ctx.seed_given;
    match cli.command {
        Command::State(args) => commands::state::run(&args, &ctx),
        Command::Simulate(args) => commands::simulate::run(&args, &ctx),
        Command::Mc(args) => commands::mc::run(&args, &ctx),
        Command::Analyze(args) => commands::analyze::run(&args, &ctx),
        Command::Sweep(args) => commands::sweep::run(&args, &ctx),
        Command::Calibrate(args) => commands::calibrate::run(&args, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("npi: error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
