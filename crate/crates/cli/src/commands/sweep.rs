use clap::Args;
use std::f64::consts::TAU;
use std::io::Write;
use std::path::PathBuf;

use npi_core::correlations::{correlation_set, estimate_antidiagonals, MeasurementConfig};
use npi_core::countsim::{accidental_correction, simulate_counts, ExperimentConfig};
use npi_core::optics::{simulate_probabilities, InterferometerConfig, Variant};
use npi_core::states::PolarizationState;

use super::{parse_detector_values, DetectorValues};
use crate::{usage, RunContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    PsiTheta,
    PhiGamma,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "psi-theta" => Ok(Family::PsiTheta),
            "phi-gamma" => Ok(Family::PhiGamma),
            other => Err(format!(
                "--family must be psi-theta or phi-gamma (got '{other}')"
            )),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::PsiTheta => "psi-theta",
            Family::PhiGamma => "phi-gamma",
        })
    }
}

/// Sweep the family phase at the standard Sagnac configuration and tabulate
/// the recovered anti-diagonal observable per point.
#[derive(Args, Debug)]
pub struct SweepArgs {
    /// State family to sweep: psi-theta (tracks f+f*) or phi-gamma (d+d*)
    #[arg(long)]
    pub family: Family,

    /// Number of grid points
    #[arg(long, default_value_t = 25)]
    pub points: usize,

    /// First phase in radians
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,

    /// Last phase in radians (inclusive)
    #[arg(long, default_value_t = TAU)]
    pub stop: f64,

    /// Monte Carlo per point instead of exact probabilities
    #[arg(long)]
    pub mc: bool,

    /// Photon pairs per second (Monte Carlo)
    #[arg(long = "pairs-per-sec", default_value_t = 1.4e6)]
    pub pairs_per_sec: f64,

    /// Seconds of data per sweep point (Monte Carlo)
    #[arg(long, default_value_t = 5.0)]
    pub duration: f64,

    /// Detector efficiency: one value or eight (Monte Carlo)
    #[arg(long, default_value = "1", value_parser = parse_detector_values)]
    pub efficiency: DetectorValues,

    /// Dark counts per second per detector: one value or eight (Monte Carlo)
    #[arg(long, default_value = "0", value_parser = parse_detector_values)]
    pub dark: DetectorValues,

    /// Timing-bin width in nanoseconds (Monte Carlo)
    #[arg(long = "bin-ns", default_value_t = 5)]
    pub bin_ns: u64,
}

pub fn run(args: &SweepArgs, ctx: &RunContext) -> anyhow::Result<()> {
    if args.points == 0 {
        return Err(usage("--points must be at least 1"));
    }
    let config = InterferometerConfig::standard(Variant::Sagnac);
    let mut rows: Vec<(f64, f64, f64)> = Vec::with_capacity(args.points);
    for i in 0..args.points {
        let fraction = if args.points == 1 {
            0.0
        } else {
            i as f64 / (args.points - 1) as f64
        };
        let phase = args.start + fraction * (args.stop - args.start);
        let state = match args.family {
            Family::PsiTheta => PolarizationState::psi_theta(phase),
            Family::PhiGamma => PolarizationState::phi_gamma(phase),
        };
        let table = simulate_probabilities(&state, &config)?;
        let table = if args.mc {
            // Each grid point owns a seed derived from (base seed, index).
            let experiment = ExperimentConfig {
                pair_rate: args.pairs_per_sec,
                duration: args.duration,
                efficiency: args.efficiency.0,
                dark_rate: args.dark.0,
                bin_width_ns: args.bin_ns,
                rng_seed: ctx.seed.wrapping_add(i as u64),
            };
            experiment.validate()?;
            let record = simulate_counts(&table, &experiment)?;
            accidental_correction(&record, args.bin_ns)?.coincidences
        } else {
            table
        };
        let set = correlation_set(&table, MeasurementConfig::StandardPi4)?;
        let est = estimate_antidiagonals(&set)?;
        let measured = match args.family {
            Family::PsiTheta => est.f_plus,
            Family::PhiGamma => est.d_plus,
        };
        rows.push((phase, measured.value, measured.sigma));
    }

    let mut csv = String::from("phase_rad,estimate,sigma\n");
    for (phase, estimate, sigma) in &rows {
        csv.push_str(&format!("{phase},{estimate},{sigma}\n"));
    }
    let outputs: Vec<PathBuf> = match ctx.out() {
        Some(path) => {
            std::fs::write(path, &csv)?;
            vec![path.to_path_buf()]
        }
        None => {
            std::io::stdout().write_all(csv.as_bytes())?;
            vec![]
        }
    };

    let mut resolved = vec![
        "--family".to_string(),
        args.family.to_string(),
        "--points".into(),
        args.points.to_string(),
        "--start".into(),
        args.start.to_string(),
        "--stop".into(),
        args.stop.to_string(),
    ];
    if args.mc {
        resolved.push("--mc".into());
        resolved.extend([
            "--pairs-per-sec".into(),
            args.pairs_per_sec.to_string(),
            "--duration".into(),
            args.duration.to_string(),
            "--efficiency".into(),
            args.efficiency.to_string(),
            "--dark".into(),
            args.dark.to_string(),
            "--bin-ns".into(),
            args.bin_ns.to_string(),
            "--seed".into(),
            ctx.seed.to_string(),
        ]);
    }
    let seed = args.mc.then_some(ctx.seed);
    ctx.finish("sweep", resolved, vec![], outputs, seed)
}
