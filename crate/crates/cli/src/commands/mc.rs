use clap::Args;
use std::path::PathBuf;

use npi_core::countsim::{generate_timestamps, simulate_counts};
use npi_core::io;
use npi_core::optics::simulate_probabilities;

use super::{ExperimentFlags, OpticsFlags};
use crate::RunContext;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    Counts,
    Timestamps,
    Both,
}

impl std::str::FromStr for Emit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "counts" => Ok(Emit::Counts),
            "timestamps" => Ok(Emit::Timestamps),
            "both" => Ok(Emit::Both),
            other => Err(format!(
                "--emit must be counts, timestamps, or both (got '{other}')"
            )),
        }
    }
}

impl std::fmt::Display for Emit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Emit::Counts => "counts",
            Emit::Timestamps => "timestamps",
            Emit::Both => "both",
        })
    }
}

#[derive(Args, Debug)]
pub struct McArgs {
    /// Polarization state file
    #[arg(long)]
    pub state: PathBuf,

    #[command(flatten)]
    pub optics: OpticsFlags,

    #[command(flatten)]
    pub experiment: ExperimentFlags,

    /// What to write: counts, timestamps, or both (both treats --out as a
    /// path prefix)
    #[arg(long, default_value = "counts")]
    pub emit: Emit,
}

pub fn run(args: &McArgs, ctx: &RunContext) -> anyhow::Result<()> {
    let state = io::read_state(&args.state)?;
    let optics_config = args.optics.config()?;
    let experiment = args.experiment.config(ctx.seed)?;
    let table = simulate_probabilities(&state, &optics_config)?;

    let mut outputs: Vec<PathBuf> = Vec::new();
    match args.emit {
        Emit::Counts => {
            let record = simulate_counts(&table, &experiment)?;
            outputs.extend(ctx.emit(&io::counts_to_json(&record))?);
        }
        Emit::Timestamps => {
            let stream = generate_timestamps(&table, &experiment)?;
            match ctx.out() {
                Some(path) => {
                    io::write_timestamps(path, &stream)?;
                    outputs.push(path.to_path_buf());
                }
                None => {
                    println!("detector,timestamp_ns");
                    for event in &stream.events {
                        println!("{},{}", event.detector, event.timestamp_ns);
                    }
                }
            }
        }
        Emit::Both => {
            let prefix = ctx.require_out("with --emit both (used as a path prefix)")?;
            let counts_path = with_suffix(prefix, ".counts.json");
            let stream_path = with_suffix(prefix, ".timestamps.csv");
            let record = simulate_counts(&table, &experiment)?;
            io::write_counts(&counts_path, &record)?;
            let stream = generate_timestamps(&table, &experiment)?;
            io::write_timestamps(&stream_path, &stream)?;
            ctx.info(&format!(
                "wrote {} and {}",
                counts_path.display(),
                stream_path.display()
            ));
            outputs.extend([counts_path, stream_path]);
        }
    }

    let mut resolved = vec!["--state".to_string(), args.state.display().to_string()];
    resolved.extend(args.optics.resolved_args());
    resolved.extend(args.experiment.resolved_args(ctx.seed));
    resolved.extend(["--emit".into(), args.emit.to_string()]);
    let anchor = (args.emit == Emit::Both)
        .then(|| ctx.out().map(|p| with_suffix(p, ".manifest.json")))
        .flatten();
    ctx.finish_at(
        anchor,
        "mc",
        resolved,
        vec![args.state.clone()],
        outputs,
        Some(ctx.seed),
    )
}

fn with_suffix(prefix: &std::path::Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}
