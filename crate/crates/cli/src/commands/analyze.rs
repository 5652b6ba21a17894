use clap::Args;
use std::path::PathBuf;

use npi_core::correlations::{chsh_report, standard_report, DEFAULT_SIGNIFICANCE};
use npi_core::countsim::{accidental_correction, bin_and_count, normalize, CountsRecord};
use npi_core::io::{self, TableFile};

use crate::{usage, RunContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Standard,
    Chsh,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "standard" => Ok(Mode::Standard),
            "chsh" => Ok(Mode::Chsh),
            other => Err(format!("--mode must be standard or chsh (got '{other}')")),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Standard => "standard",
            Mode::Chsh => "chsh",
        })
    }
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Counts record or exact probability table (JSON)
    #[arg(long)]
    pub counts: Option<PathBuf>,

    /// Raw timestamp stream (CSV); requires --duration
    #[arg(long)]
    pub timestamps: Option<PathBuf>,

    /// Run length in seconds (timestamp input only)
    #[arg(long)]
    pub duration: Option<f64>,

    /// Timing-bin width in nanoseconds
    #[arg(long = "bin-ns", default_value_t = 5)]
    pub bin_ns: u64,

    /// Calibration file for normalization
    #[arg(long)]
    pub calibration: Option<PathBuf>,

    /// standard: anti-diagonals, verdict, Bell ID, fidelity bounds;
    /// chsh: Bell parameters and threshold verdicts
    #[arg(long, default_value = "standard")]
    pub mode: Mode,

    /// Detection significance in standard deviations
    #[arg(long, default_value_t = DEFAULT_SIGNIFICANCE)]
    pub significance: f64,

    /// Also write the corrected (and normalized, if calibrated) counts here
    #[arg(long = "emit-counts")]
    pub emit_counts: Option<PathBuf>,
}

pub fn run(args: &AnalyzeArgs, ctx: &RunContext) -> anyhow::Result<()> {
    let mut inputs: Vec<PathBuf> = Vec::new();
    let mut resolved: Vec<String> = Vec::new();

    let table_file = match (&args.counts, &args.timestamps) {
        (Some(path), None) => {
            inputs.push(path.clone());
            resolved.extend(["--counts".into(), path.display().to_string()]);
            io::read_table_file(path)?
        }
        (None, Some(path)) => {
            let duration = args
                .duration
                .ok_or_else(|| usage("--timestamps input requires --duration"))?;
            inputs.push(path.clone());
            resolved.extend([
                "--timestamps".into(),
                path.display().to_string(),
                "--duration".into(),
                duration.to_string(),
            ]);
            let stream = io::read_timestamps(path)?;
            TableFile::Counts(bin_and_count(&stream, args.bin_ns, duration)?)
        }
        _ => return Err(usage("pass exactly one of --counts or --timestamps")),
    };
    resolved.extend(["--bin-ns".into(), args.bin_ns.to_string()]);

    let calibration = match &args.calibration {
        Some(path) => {
            inputs.push(path.clone());
            resolved.extend(["--calibration".into(), path.display().to_string()]);
            Some(io::read_calibration(path)?)
        }
        None => None,
    };
    resolved.extend([
        "--mode".into(),
        args.mode.to_string(),
        "--significance".into(),
        args.significance.to_string(),
    ]);

    let (table, normalized_flag, processed): (_, Option<bool>, Option<CountsRecord>) =
        match table_file {
            TableFile::Probability(table) => {
                if calibration.is_some() {
                    ctx.info("exact probability table: calibration not applied");
                }
                (table, None, None)
            }
            TableFile::Counts(record) => {
                let corrected = if record.accidental_corrected {
                    record
                } else {
                    accidental_correction(&record, args.bin_ns)?
                };
                let finished = match (&calibration, corrected.normalized) {
                    (Some(cal), false) => normalize(&corrected, cal)?,
                    (Some(_), true) => {
                        ctx.info("counts are already normalized; calibration not re-applied");
                        corrected
                    }
                    (None, false) => {
                        ctx.info("no calibration supplied; proceeding with un-normalized counts");
                        corrected
                    }
                    (None, true) => corrected,
                };
                (
                    finished.coincidences.clone(),
                    Some(finished.normalized),
                    Some(finished),
                )
            }
        };

    if let (Some(path), Some(record)) = (&args.emit_counts, &processed) {
        io::write_counts(path, record)?;
        resolved.extend(["--emit-counts".into(), path.display().to_string()]);
        ctx.info(&format!("wrote processed counts to {}", path.display()));
    }

    let mut report = match args.mode {
        Mode::Standard => standard_report(&table, args.significance)?,
        Mode::Chsh => chsh_report(&table, args.significance)?,
    };
    report.counts_normalized = normalized_flag;

    let mut outputs: Vec<PathBuf> = ctx
        .emit(&io::report_to_json(&report))?
        .into_iter()
        .collect();
    if let (Some(path), Some(_)) = (&args.emit_counts, &processed) {
        outputs.push(path.clone());
    }
    ctx.finish("analyze", resolved, inputs, outputs, None)
}
