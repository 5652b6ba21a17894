use clap::Args;
use std::path::PathBuf;

use npi_core::io;
use npi_core::states::{BellKind, PolarizationState};

use crate::{usage, RunContext};

#[derive(Args, Debug)]
pub struct StateArgs {
    /// One of the eight Bell states (psi+, psi-, phi+, phi-, psi+s, ...)
    #[arg(long)]
    pub bell: Option<BellKind>,

    /// (|HV⟩ + e^{iθ}|VH⟩)/√2 with the given θ in radians
    #[arg(long = "psi-theta")]
    pub psi_theta: Option<f64>,

    /// (|HH⟩ + e^{iγ}|VV⟩)/√2 with the given γ in radians
    #[arg(long = "phi-gamma")]
    pub phi_gamma: Option<f64>,

    /// Product state: a,theta_a,b,theta_b (radians)
    #[arg(long, value_delimiter = ',')]
    pub separable: Option<Vec<f64>>,

    /// The maximally mixed state I/4
    #[arg(long = "maximally-mixed")]
    pub maximally_mixed: bool,

    /// Convex mixture of saved states: file:weight[,file:weight...]
    #[arg(long, value_delimiter = ',')]
    pub mix: Vec<String>,

    /// Blend with the maximally mixed state: p·ρ + (1−p)·I/4
    #[arg(long = "white-noise")]
    pub white_noise: Option<f64>,

    /// Free-text label stored in the file
    #[arg(long)]
    pub label: Option<String>,
}

pub fn run(args: &StateArgs, ctx: &RunContext) -> anyhow::Result<()> {
    let selectors = usize::from(args.bell.is_some())
        + usize::from(args.psi_theta.is_some())
        + usize::from(args.phi_gamma.is_some())
        + usize::from(args.separable.is_some())
        + usize::from(args.maximally_mixed)
        + usize::from(!args.mix.is_empty());
    if selectors != 1 {
        return Err(usage(
            "pick exactly one of --bell, --psi-theta, --phi-gamma, --separable, \
             --maximally-mixed, --mix",
        ));
    }

    let mut inputs: Vec<PathBuf> = Vec::new();
    let mut resolved: Vec<String> = Vec::new();
    let mut state = if let Some(kind) = args.bell {
        resolved.extend(["--bell".into(), kind.to_string()]);
        PolarizationState::bell(kind)
    } else if let Some(theta) = args.psi_theta {
        resolved.extend(["--psi-theta".into(), theta.to_string()]);
        PolarizationState::psi_theta(theta)
    } else if let Some(gamma) = args.phi_gamma {
        resolved.extend(["--phi-gamma".into(), gamma.to_string()]);
        PolarizationState::phi_gamma(gamma)
    } else if let Some(params) = &args.separable {
        let [a, theta_a, b, theta_b] = params[..] else {
            return Err(usage("--separable takes a,theta_a,b,theta_b"));
        };
        resolved.extend(["--separable".into(), format!("{a},{theta_a},{b},{theta_b}")]);
        PolarizationState::separable_pure(a, theta_a, b, theta_b)
    } else if args.maximally_mixed {
        resolved.push("--maximally-mixed".into());
        PolarizationState::maximally_mixed()
    } else {
        let mut states = Vec::new();
        let mut weights = Vec::new();
        for item in &args.mix {
            let (path, weight) = item
                .rsplit_once(':')
                .ok_or_else(|| usage(format!("--mix item '{item}' is not file:weight")))?;
            let weight: f64 = weight
                .parse()
                .map_err(|_| usage(format!("invalid weight in --mix item '{item}'")))?;
            states.push(io::read_state(path)?);
            weights.push(weight);
            inputs.push(PathBuf::from(path));
        }
        resolved.extend(["--mix".into(), args.mix.join(",")]);
        PolarizationState::mix(&states, &weights)?
    };

    if let Some(p) = args.white_noise {
        state = state.white_noise(p)?;
        resolved.extend(["--white-noise".into(), p.to_string()]);
    }
    if let Some(label) = &args.label {
        state = state.with_label(label.clone());
        resolved.extend(["--label".into(), label.clone()]);
    }

    let written = ctx.emit(&io::state_to_json(&state))?;
    ctx.finish(
        "state",
        resolved,
        inputs,
        written.into_iter().collect(),
        None,
    )
}
