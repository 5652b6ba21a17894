use clap::Args;
use std::path::PathBuf;

use npi_core::countsim::{accidental_correction, calibrate};
use npi_core::io;

use crate::RunContext;

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    /// Counts record from an unentangled equal-flux source
    #[arg(long)]
    pub counts: PathBuf,

    /// Apply accidental correction first (otherwise uncorrected input is an
    /// error)
    #[arg(long)]
    pub correct: bool,

    /// Timing-bin width in nanoseconds for --correct
    #[arg(long = "bin-ns", default_value_t = 5)]
    pub bin_ns: u64,

    /// Provenance note stored in the calibration file
    #[arg(long = "source-tag", default_value = "unentangled calibration source")]
    pub source_tag: String,
}

pub fn run(args: &CalibrateArgs, ctx: &RunContext) -> anyhow::Result<()> {
    let record = io::read_counts(&args.counts)?;
    let record = if args.correct && !record.accidental_corrected {
        accidental_correction(&record, args.bin_ns)?
    } else {
        record
    };
    let cal = calibrate(&record, args.source_tag.clone())?;
    let written = ctx.emit(&io::calibration_to_json(&cal))?;

    let mut resolved = vec!["--counts".to_string(), args.counts.display().to_string()];
    if args.correct {
        resolved.extend([
            "--correct".into(),
            "--bin-ns".into(),
            args.bin_ns.to_string(),
        ]);
    }
    resolved.extend(["--source-tag".into(), args.source_tag.clone()]);
    ctx.finish(
        "calibrate",
        resolved,
        vec![args.counts.clone()],
        written.into_iter().collect(),
        None,
    )
}
