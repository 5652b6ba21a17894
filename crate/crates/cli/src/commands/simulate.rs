use clap::Args;
use std::path::PathBuf;

use npi_core::io;
use npi_core::optics::simulate_probabilities;

use super::OpticsFlags;
use crate::RunContext;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Polarization state file
    #[arg(long)]
    pub state: PathBuf,

    #[command(flatten)]
    pub optics: OpticsFlags,
}

pub fn run(args: &SimulateArgs, ctx: &RunContext) -> anyhow::Result<()> {
    let state = io::read_state(&args.state)?;
    let config = args.optics.config()?;
    let table = simulate_probabilities(&state, &config)?;
    let written = ctx.emit(&io::table_to_json(&table))?;

    let mut resolved = vec!["--state".to_string(), args.state.display().to_string()];
    resolved.extend(args.optics.resolved_args());
    ctx.finish(
        "simulate",
        resolved,
        vec![args.state.clone()],
        written.into_iter().collect(),
        None,
    )
}
