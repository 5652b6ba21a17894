pub mod analyze;
pub mod calibrate;
pub mod mc;
pub mod simulate;
pub mod state;
pub mod sweep;

use clap::Args;
use npi_core::countsim::ExperimentConfig;
use npi_core::optics::{InterferometerConfig, Variant, CHSH_PRE_PHASE, STANDARD_PHASE};

/// Interferometer flags shared by the simulation commands.
#[derive(Args, Debug, Clone)]
pub struct OpticsFlags {
    /// Interferometer variant: sagnac or mz
    #[arg(long, default_value = "sagnac")]
    pub variant: Variant,

    /// Alice's interferometer phase in radians
    #[arg(long, default_value_t = STANDARD_PHASE)]
    pub alpha: f64,

    /// Bob's interferometer phase in radians
    #[arg(long, default_value_t = STANDARD_PHASE)]
    pub beta: f64,

    /// CHSH configuration: π/4 pre-phase on the vertical input component
    #[arg(long)]
    pub chsh: bool,
}

impl OpticsFlags {
    pub fn config(&self) -> anyhow::Result<InterferometerConfig> {
        let mut config = InterferometerConfig::new(self.variant, self.alpha, self.beta);
        if self.chsh {
            config = config.with_pre_phase(CHSH_PRE_PHASE);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn resolved_args(&self) -> Vec<String> {
        let mut args = vec![
            "--variant".into(),
            self.variant.to_string(),
            "--alpha".into(),
            self.alpha.to_string(),
            "--beta".into(),
            self.beta.to_string(),
        ];
        if self.chsh {
            args.push("--chsh".into());
        }
        args
    }
}

/// Detection flags shared by the Monte Carlo commands.
#[derive(Args, Debug, Clone)]
pub struct ExperimentFlags {
    /// Photon pairs generated per second
    #[arg(long = "pairs-per-sec", default_value_t = 1.4e6)]
    pub pairs_per_sec: f64,

    /// Run length in seconds
    #[arg(long, default_value_t = 100.0)]
    pub duration: f64,

    /// Detector efficiency: one value for all eight detectors, or eight
    /// comma-separated values
    #[arg(long, default_value = "1", value_parser = parse_detector_values)]
    pub efficiency: DetectorValues,

    /// Dark counts per second per detector: one value or eight
    #[arg(long, default_value = "0", value_parser = parse_detector_values)]
    pub dark: DetectorValues,

    /// Timing-bin width in nanoseconds
    #[arg(long = "bin-ns", default_value_t = 5)]
    pub bin_ns: u64,
}

impl ExperimentFlags {
    pub fn config(&self, seed: u64) -> anyhow::Result<ExperimentConfig> {
        let config = ExperimentConfig {
            pair_rate: self.pairs_per_sec,
            duration: self.duration,
            efficiency: self.efficiency.0,
            dark_rate: self.dark.0,
            bin_width_ns: self.bin_ns,
            rng_seed: seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn resolved_args(&self, seed: u64) -> Vec<String> {
        vec![
            "--pairs-per-sec".into(),
            self.pairs_per_sec.to_string(),
            "--duration".into(),
            self.duration.to_string(),
            "--efficiency".into(),
            self.efficiency.to_string(),
            "--dark".into(),
            self.dark.to_string(),
            "--bin-ns".into(),
            self.bin_ns.to_string(),
            "--seed".into(),
            seed.to_string(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct DetectorValues(pub [f64; 8]);

impl std::fmt::Display for DetectorValues {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

fn parse_detector_values(text: &str) -> Result<DetectorValues, String> {
    let parts: Vec<&str> = text.split(',').collect();
    let parsed: Result<Vec<f64>, _> = parts.iter().map(|p| p.trim().parse::<f64>()).collect();
    let values = parsed.map_err(|e| format!("invalid number in '{text}': {e}"))?;
    match values.len() {
        1 => Ok(DetectorValues([values[0]; 8])),
        8 => {
            let mut out = [0.0; 8];
            out.copy_from_slice(&values);
            Ok(DetectorValues(out))
        }
        n => Err(format!("expected 1 or 8 comma-separated values, got {n}")),
    }
}
