//! Correlation coefficients, entanglement verdicts, Bell-state
//! identification, fidelity bounds, and the polarization CHSH test.
//!
//! All estimators assume tables taken at the Sagnac standard configuration
//! (α = β = π/4), optionally with the CHSH vertical pre-phase. At those
//! settings each polarization pair (j, s) obeys
//!
//! ```text
//!   E_HH = (f+f*) + i(d−d*)      E_HV = −(d+d*) − i(f−f*)
//!   E_VV = (f+f*) − i(d−d*)      E_VH = −(d+d*) + i(f−f*)
//! ```
//!
//! which the propagation pipeline pins down to machine precision (the
//! recovery signs below are frozen against that oracle).

use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use thiserror::Error;

use crate::optics::{CoincidenceTable, Pol, TableKind};
use crate::states::{AntidiagonalSummary, BellKind};

/// Default significance (in standard deviations) for all verdicts.
pub const DEFAULT_SIGNIFICANCE: f64 = 3.0;
/// Entanglement threshold on |f+f*| and |d+d*|.
pub const SEPARABLE_BOUND: f64 = 0.5;
/// Locality bound on the Bell parameters.
pub const LOCAL_BOUND: f64 = 2.0;
/// Separable-state bound on the Bell parameters.
pub const SEPARABLE_S_BOUND: f64 = SQRT_2;
/// Quantum ceiling on the Bell parameters.
pub const TSIRELSON_BOUND: f64 = 2.0 * SQRT_2;

#[derive(Debug, Error)]
pub enum CorrelationError {
    #[error("coincidence quadruple for ({0:?}, {1:?}) sums to zero")]
    ZeroDenominator(Pol, Pol),
    #[error("operation requires the {expected} configuration, set is tagged {found}")]
    Configuration {
        expected: &'static str,
        found: &'static str,
    },
}

/// A real estimate with its one-standard-deviation uncertainty
/// (σ = 0 for exact probabilities).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    pub sigma: f64,
}

impl Measured {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: 0.0 }
    }

    /// Significance of `self.value` exceeding `threshold` in magnitude.
    /// Exact values map to ±∞ (0 at equality).
    fn z_above(&self, threshold: f64) -> f64 {
        let excess = self.value.abs() - threshold;
        if self.sigma > 0.0 {
            excess / self.sigma
        } else if excess > 0.0 {
            f64::INFINITY
        } else if excess < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    }
}

/// Which measurement configuration a correlation set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementConfig {
    StandardPi4,
    ChshPi4,
}

impl MeasurementConfig {
    fn name(self) -> &'static str {
        match self {
            MeasurementConfig::StandardPi4 => "standard_pi4",
            MeasurementConfig::ChshPi4 => "chsh_pi4",
        }
    }
}

/// The four polarization-resolved port-parity correlation coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSet {
    pub e_hh: Measured,
    pub e_vv: Measured,
    pub e_hv: Measured,
    pub e_vh: Measured,
    pub configuration: MeasurementConfig,
}

impl CorrelationSet {
    pub fn get(&self, alice: Pol, bob: Pol) -> Measured {
        match (alice, bob) {
            (Pol::H, Pol::H) => self.e_hh,
            (Pol::V, Pol::V) => self.e_vv,
            (Pol::H, Pol::V) => self.e_hv,
            (Pol::V, Pol::H) => self.e_vh,
        }
    }
}

/// E = [v(0,0)+v(1,1)−v(0,1)−v(1,0)] / Σv for one polarization pair, with a
/// first-order Poisson uncertainty when the table holds counts.
fn coefficient(
    table: &CoincidenceTable,
    alice: Pol,
    bob: Pol,
) -> Result<Measured, CorrelationError> {
    let q = table.quadruple(alice, bob);
    let parallel = q[0] + q[1];
    let crossed = q[2] + q[3];
    let total = parallel + crossed;
    if total <= 0.0 {
        return Err(CorrelationError::ZeroDenominator(alice, bob));
    }
    let value = (parallel - crossed) / total;
    let sigma = match table.kind() {
        TableKind::Probability => 0.0,
        // First-order propagation for independent Poisson channel counts:
        // Var(E) = 4(M² Var_P + P² Var_M)/(P+M)^4 with Var ≈ observed count.
        // An empty side still carries at least one count of variance, so a
        // finite sample never claims σ = 0 away from the trivial table.
        TableKind::Count => {
            let var_p = parallel.max(1.0);
            let var_m = crossed.max(1.0);
            2.0 * (crossed.powi(2) * var_p + parallel.powi(2) * var_m).sqrt() / total.powi(2)
        }
    };
    Ok(Measured::new(value, sigma))
}

/// Compute all four correlation coefficients from a coincidence table.
///
/// Count tables must already be accidental-corrected (and normalized when a
/// calibration exists); the countsim pipeline flags enforce that ordering.
pub fn correlation_set(
    table: &CoincidenceTable,
    configuration: MeasurementConfig,
) -> Result<CorrelationSet, CorrelationError> {
    Ok(CorrelationSet {
        e_hh: coefficient(table, Pol::H, Pol::H)?,
        e_vv: coefficient(table, Pol::V, Pol::V)?,
        e_hv: coefficient(table, Pol::H, Pol::V)?,
        e_vh: coefficient(table, Pol::V, Pol::H)?,
        configuration,
    })
}

/// Anti-diagonal observables recovered from correlations, with uncertainties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntidiagonalEstimate {
    pub f_plus: Measured,
    pub d_plus: Measured,
    pub f_minus_im: Measured,
    pub d_minus_im: Measured,
}

impl AntidiagonalEstimate {
    pub fn values(&self) -> AntidiagonalSummary {
        AntidiagonalSummary {
            f_plus: self.f_plus.value,
            d_plus: self.d_plus.value,
            f_minus_im: self.f_minus_im.value,
            d_minus_im: self.d_minus_im.value,
        }
    }

    pub fn exact(summary: AntidiagonalSummary) -> Self {
        Self {
            f_plus: Measured::exact(summary.f_plus),
            d_plus: Measured::exact(summary.d_plus),
            f_minus_im: Measured::exact(summary.f_minus_im),
            d_minus_im: Measured::exact(summary.d_minus_im),
        }
    }
}

fn half_combination(a: Measured, b: Measured, sign_a: f64, sign_b: f64) -> Measured {
    Measured::new(
        (sign_a * a.value + sign_b * b.value) / 2.0,
        (a.sigma.powi(2) + b.sigma.powi(2)).sqrt() / 2.0,
    )
}

/// Recover (f+f*, d+d*, i(f−f*), i(d−d*)) from a standard-configuration set.
pub fn estimate_antidiagonals(
    set: &CorrelationSet,
) -> Result<AntidiagonalEstimate, CorrelationError> {
    if set.configuration != MeasurementConfig::StandardPi4 {
        return Err(CorrelationError::Configuration {
            expected: MeasurementConfig::StandardPi4.name(),
            found: set.configuration.name(),
        });
    }
    Ok(AntidiagonalEstimate {
        f_plus: half_combination(set.e_hh, set.e_vv, 1.0, 1.0),
        d_plus: half_combination(set.e_hv, set.e_vh, -1.0, -1.0),
        // Imaginary-part signs frozen against the propagation oracle.
        d_minus_im: half_combination(set.e_hh, set.e_vv, 1.0, -1.0),
        f_minus_im: half_combination(set.e_vh, set.e_hv, 1.0, -1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detection {
    Detected,
    NotDetected,
    Inconclusive,
}

/// Which separable bound produced the detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessBound {
    FBound,
    DBound,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementVerdict {
    pub f_plus: Measured,
    pub d_plus: Measured,
    pub entangled: Detection,
    #[serde(with = "z_serde")]
    pub z_score: f64,
    pub which_bound: WitnessBound,
}

/// Test |f+f*| > 1/2 or |d+d*| > 1/2 at significance `z_star`.
///
/// The bounds are strict: an exact estimate sitting exactly at 1/2 is
/// NotDetected. Detected requires the excess to clear `z_star` standard
/// deviations; NotDetected requires both estimates to sit below the bound by
/// the same margin; anything else is Inconclusive.
pub fn entanglement_test(est: &AntidiagonalEstimate, z_star: f64) -> EntanglementVerdict {
    let zf = est.f_plus.z_above(SEPARABLE_BOUND);
    let zd = est.d_plus.z_above(SEPARABLE_BOUND);
    let z_score = zf.max(zd);
    let exact = est.f_plus.sigma == 0.0 && est.d_plus.sigma == 0.0;
    let (entangled, which_bound) = if exact {
        if z_score > 0.0 {
            (
                Detection::Detected,
                if zf >= zd {
                    WitnessBound::FBound
                } else {
                    WitnessBound::DBound
                },
            )
        } else {
            (Detection::NotDetected, WitnessBound::None)
        }
    } else if z_score >= z_star {
        (
            Detection::Detected,
            if zf >= zd {
                WitnessBound::FBound
            } else {
                WitnessBound::DBound
            },
        )
    } else if zf <= -z_star && zd <= -z_star {
        (Detection::NotDetected, WitnessBound::None)
    } else {
        (Detection::Inconclusive, WitnessBound::None)
    };
    EntanglementVerdict {
        f_plus: est.f_plus,
        d_plus: est.d_plus,
        entangled,
        z_score,
        which_bound,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellIdentification {
    pub best: Option<BellKind>,
    pub distance: f64,
    pub coordinates: AntidiagonalEstimate,
}

/// Nearest Bell signature in (f+f*, d+d*, i(f−f*), i(d−d*)) space.
///
/// Each of the eight signatures is ±1 in exactly one coordinate. The match
/// only counts when the winning coordinate exceeds 1/2 in magnitude at
/// significance `z_star`; otherwise `best` is None.
pub fn identify_bell(est: &AntidiagonalEstimate, z_star: f64) -> BellIdentification {
    let coords = est.values().as_array();
    let mut best_kind = BellKind::PsiPlus;
    let mut best_dist = f64::INFINITY;
    for kind in BellKind::ALL {
        let sig = kind.signature().as_array();
        let dist = coords
            .iter()
            .zip(sig)
            .map(|(c, s)| (c - s).powi(2))
            .sum::<f64>()
            .sqrt();
        if dist < best_dist {
            best_dist = dist;
            best_kind = kind;
        }
    }
    let winning = match best_kind {
        BellKind::PsiPlus | BellKind::PsiMinus => est.f_plus,
        BellKind::PhiPlus | BellKind::PhiMinus => est.d_plus,
        BellKind::PsiPlusShifted | BellKind::PsiMinusShifted => est.f_minus_im,
        BellKind::PhiPlusShifted | BellKind::PhiMinusShifted => est.d_minus_im,
    };
    let z = winning.z_above(SEPARABLE_BOUND);
    let significant = if winning.sigma == 0.0 {
        z > 0.0
    } else {
        z >= z_star
    };
    BellIdentification {
        best: significant.then_some(best_kind),
        distance: best_dist,
        coordinates: *est,
    }
}

/// Lower bounds on the four Bell-state fidelities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityBounds {
    pub psi_plus: f64,
    pub psi_minus: f64,
    pub phi_plus: f64,
    pub phi_minus: f64,
}

/// F_Ψ± ≥ (|f+f*| ± (f+f*))/2 and F_Φ± ≥ (|d+d*| ± (d+d*))/2.
///
/// At most one bound can exceed 1/2: the four Bell fidelities sum to 1.
pub fn fidelity_bounds(summary: &AntidiagonalSummary) -> FidelityBounds {
    let f = summary.f_plus;
    let d = summary.d_plus;
    let clamp = |x: f64| x.clamp(0.0, 1.0);
    FidelityBounds {
        psi_plus: clamp((f.abs() + f) / 2.0),
        psi_minus: clamp((f.abs() - f) / 2.0),
        phi_plus: clamp((d.abs() + d) / 2.0),
        phi_minus: clamp((d.abs() - d) / 2.0),
    }
}

/// The two Bell parameters of the CHSH configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellParameters {
    pub s_psi: Measured,
    pub s_phi: Measured,
}

/// S_ψ = E_HH + E_VV − E_HV + E_VH = 2√2(f+f*) and
/// S_φ = E_HH − E_VV − E_HV − E_VH = 2√2(d+d*), for a CHSH-configured set.
pub fn chsh_bell_parameters(set: &CorrelationSet) -> Result<BellParameters, CorrelationError> {
    if set.configuration != MeasurementConfig::ChshPi4 {
        return Err(CorrelationError::Configuration {
            expected: MeasurementConfig::ChshPi4.name(),
            found: set.configuration.name(),
        });
    }
    let quad_sigma = (set.e_hh.sigma.powi(2)
        + set.e_vv.sigma.powi(2)
        + set.e_hv.sigma.powi(2)
        + set.e_vh.sigma.powi(2))
    .sqrt();
    let s_psi = set.e_hh.value + set.e_vv.value - set.e_hv.value + set.e_vh.value;
    let s_phi = set.e_hh.value - set.e_vv.value - set.e_hv.value - set.e_vh.value;
    Ok(BellParameters {
        s_psi: Measured::new(s_psi, quad_sigma),
        s_phi: Measured::new(s_phi, quad_sigma),
    })
}

/// Threshold checks for one Bell parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterVerdict {
    pub violates_local_bound: bool,
    pub exceeds_separable_bound: bool,
    #[serde(with = "z_serde")]
    pub z_local: f64,
    #[serde(with = "z_serde")]
    pub z_separable: f64,
}

fn parameter_verdict(s: Measured) -> ParameterVerdict {
    ParameterVerdict {
        violates_local_bound: s.value.abs() > LOCAL_BOUND,
        exceeds_separable_bound: s.value.abs() > SEPARABLE_S_BOUND,
        z_local: s.z_above(LOCAL_BOUND),
        z_separable: s.z_above(SEPARABLE_S_BOUND),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshVerdict {
    pub s_psi: ParameterVerdict,
    pub s_phi: ParameterVerdict,
}

/// Evaluate |S| > 2 (locality) and |S| > √2 (separability) for both
/// parameters, with z-scores for each threshold.
pub fn chsh_verdict(params: &BellParameters) -> ChshVerdict {
    ChshVerdict {
        s_psi: parameter_verdict(params.s_psi),
        s_phi: parameter_verdict(params.s_phi),
    }
}

/// Poisson-resampled cross-check on the delta-method uncertainties.
///
/// Each channel count is redrawn as Poisson(count) `resamples` times and the
/// anti-diagonal estimates recomputed; the returned sigmas are the sample
/// standard deviations (values stay the original point estimates). Resamples
/// that empty a quadruple are dropped.
pub fn bootstrap_antidiagonals(
    table: &CoincidenceTable,
    resamples: usize,
    seed: u64,
) -> Result<AntidiagonalEstimate, CorrelationError> {
    let point = estimate_antidiagonals(&correlation_set(table, MeasurementConfig::StandardPi4)?)?;
    let mut samples: Vec<[f64; 4]> = Vec::with_capacity(resamples);
    let mut rng = resample_rng(seed);
    for _ in 0..resamples {
        let Some(resampled) = resample_counts(table, &mut rng) else {
            continue;
        };
        let Ok(set) = correlation_set(&resampled, MeasurementConfig::StandardPi4) else {
            continue;
        };
        let est = estimate_antidiagonals(&set)?;
        samples.push(est.values().as_array());
    }
    let sigmas = sample_std(&samples);
    Ok(AntidiagonalEstimate {
        f_plus: Measured::new(point.f_plus.value, sigmas[0]),
        d_plus: Measured::new(point.d_plus.value, sigmas[1]),
        f_minus_im: Measured::new(point.f_minus_im.value, sigmas[2]),
        d_minus_im: Measured::new(point.d_minus_im.value, sigmas[3]),
    })
}

/// Poisson-resampled sigmas for the Bell parameters of a CHSH-configured
/// count table.
pub fn bootstrap_bell_parameters(
    table: &CoincidenceTable,
    resamples: usize,
    seed: u64,
) -> Result<BellParameters, CorrelationError> {
    let point = chsh_bell_parameters(&correlation_set(table, MeasurementConfig::ChshPi4)?)?;
    let mut samples: Vec<[f64; 4]> = Vec::with_capacity(resamples);
    let mut rng = resample_rng(seed);
    for _ in 0..resamples {
        let Some(resampled) = resample_counts(table, &mut rng) else {
            continue;
        };
        let Ok(set) = correlation_set(&resampled, MeasurementConfig::ChshPi4) else {
            continue;
        };
        let params = chsh_bell_parameters(&set)?;
        samples.push([params.s_psi.value, params.s_phi.value, 0.0, 0.0]);
    }
    let sigmas = sample_std(&samples);
    Ok(BellParameters {
        s_psi: Measured::new(point.s_psi.value, sigmas[0]),
        s_phi: Measured::new(point.s_phi.value, sigmas[1]),
    })
}

fn resample_rng(seed: u64) -> rand_chacha::ChaCha12Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha12Rng::seed_from_u64(seed)
}

fn resample_counts(
    table: &CoincidenceTable,
    rng: &mut rand_chacha::ChaCha12Rng,
) -> Option<CoincidenceTable> {
    use rand_distr::Distribution;
    let mut values = [0.0; 16];
    for (out, &v) in values.iter_mut().zip(table.values()) {
        if v > 0.0 {
            let draw: f64 = rand_distr::Poisson::new(v).ok()?.sample(rng);
            *out = draw;
        }
    }
    let singles = table.singles().copied().unwrap_or([0.0; 8]);
    CoincidenceTable::from_counts(values, singles).ok()
}

fn sample_std(samples: &[[f64; 4]]) -> [f64; 4] {
    let n = samples.len() as f64;
    if n < 2.0 {
        return [0.0; 4];
    }
    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let mean = samples.iter().map(|s| s[k]).sum::<f64>() / n;
        let var = samples.iter().map(|s| (s[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        *slot = var.sqrt();
    }
    out
}

/// Exact estimates make some z-scores ±∞, which JSON cannot hold as numbers;
/// encode those as strings and read either form back.
mod z_serde {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            serializer.serialize_f64(*value)
        } else if *value > 0.0 {
            serializer.serialize_str("inf")
        } else if *value < 0.0 {
            serializer.serialize_str("-inf")
        } else {
            serializer.serialize_str("nan")
        }
    }

    struct ZVisitor;

    impl Visitor<'_> for ZVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            f.write_str("a number or 'inf'/'-inf'/'nan'")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(E::custom(format!("invalid z-score '{other}'"))),
            }
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        deserializer.deserialize_any(ZVisitor)
    }
}

/// Conventional CHSH correlation E(a,b) from the four polarization-pair
/// probabilities or counts (P_HH, P_VV, P_HV, P_VH), for scripting the
/// rotation-based test alongside the interferometric one.
pub fn standard_chsh_correlation(p: &[f64; 4]) -> Result<f64, CorrelationError> {
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return Err(CorrelationError::ZeroDenominator(Pol::H, Pol::H));
    }
    Ok((p[0] + p[1] - p[2] - p[3]) / total)
}

/// Everything the analysis pipeline reports for one coincidence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub correlations: CorrelationSet,
    pub significance: f64,
    /// For count inputs: whether calibration normalization was applied.
    /// Absent when the source was an exact probability table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts_normalized: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antidiagonals: Option<AntidiagonalEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entanglement: Option<EntanglementVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bell_identification: Option<BellIdentification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_bounds: Option<FidelityBounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bell_parameters: Option<BellParameters>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chsh: Option<ChshVerdict>,
}

/// Standard-configuration report: antidiagonals, entanglement verdict,
/// Bell identification, fidelity bounds.
pub fn standard_report(
    table: &CoincidenceTable,
    z_star: f64,
) -> Result<AnalysisReport, CorrelationError> {
    let set = correlation_set(table, MeasurementConfig::StandardPi4)?;
    let est = estimate_antidiagonals(&set)?;
    Ok(AnalysisReport {
        correlations: set,
        significance: z_star,
        counts_normalized: None,
        antidiagonals: Some(est),
        entanglement: Some(entanglement_test(&est, z_star)),
        bell_identification: Some(identify_bell(&est, z_star)),
        fidelity_bounds: Some(fidelity_bounds(&est.values())),
        bell_parameters: None,
        chsh: None,
    })
}

/// CHSH-configuration report: Bell parameters and threshold verdicts.
pub fn chsh_report(
    table: &CoincidenceTable,
    z_star: f64,
) -> Result<AnalysisReport, CorrelationError> {
    let set = correlation_set(table, MeasurementConfig::ChshPi4)?;
    let params = chsh_bell_parameters(&set)?;
    Ok(AnalysisReport {
        correlations: set,
        significance: z_star,
        counts_normalized: None,
        antidiagonals: None,
        entanglement: None,
        bell_identification: None,
        fidelity_bounds: None,
        bell_parameters: Some(params),
        chsh: Some(chsh_verdict(&params)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{analytic_bell_probabilities, InterferometerConfig, Variant};
    use crate::states::PolarizationState;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector2;
    use num_complex::Complex64;

    fn standard_table(kind: BellKind) -> CoincidenceTable {
        analytic_bell_probabilities(kind, &InterferometerConfig::standard(Variant::Sagnac)).unwrap()
    }

    #[test]
    fn psi_plus_correlations_at_standard_config() {
        let set = correlation_set(
            &standard_table(BellKind::PsiPlus),
            MeasurementConfig::StandardPi4,
        )
        .unwrap();
        assert_abs_diff_eq!(set.e_hh.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(set.e_vv.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(set.e_hv.value, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(set.e_vh.value, 0.0, epsilon = 1e-12);
        assert_eq!(set.e_hh.sigma, 0.0);
    }

    #[test]
    fn phi_minus_correlations_at_standard_config() {
        let set = correlation_set(
            &standard_table(BellKind::PhiMinus),
            MeasurementConfig::StandardPi4,
        )
        .unwrap();
        assert_abs_diff_eq!(set.e_hv.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(set.e_vh.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(set.e_hh.value, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(set.e_vv.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_table_gives_zero_coefficients() {
        let table = CoincidenceTable::from_probabilities([1.0 / 16.0; 16], None).unwrap();
        let set = correlation_set(&table, MeasurementConfig::StandardPi4).unwrap();
        for m in [set.e_hh, set.e_vv, set.e_hv, set.e_vh] {
            assert_abs_diff_eq!(m.value, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_quadruple_is_an_error() {
        let mut values = [0.0; 16];
        // Only parallel-polarization channels populated: the HV quadruple is empty.
        values[0] = 0.25;
        values[10] = 0.25;
        values[5] = 0.25;
        values[15] = 0.25;
        let table = CoincidenceTable::from_probabilities(values, None).unwrap();
        assert!(matches!(
            correlation_set(&table, MeasurementConfig::StandardPi4),
            Err(CorrelationError::ZeroDenominator(..))
        ));
    }

    #[test]
    fn count_sigma_follows_the_delta_method() {
        let mut values = [0.0; 16];
        let q = [400.0, 420.0, 90.0, 110.0];
        values[0] = q[0]; // HA0HB0
        values[10] = q[1]; // HA1HB1
        values[2] = q[2]; // HA0HB1
        values[8] = q[3]; // HA1HB0
        for idx in [1, 3, 4, 5, 6, 7, 9, 11, 12, 13, 14, 15] {
            values[idx] = 100.0;
        }
        let table = CoincidenceTable::from_counts(values, [500.0; 8]).unwrap();
        let set = correlation_set(&table, MeasurementConfig::StandardPi4).unwrap();
        let (p, m) = (820.0, 200.0);
        let total: f64 = p + m;
        assert_abs_diff_eq!(set.e_hh.value, (p - m) / total, epsilon = 1e-12);
        assert_abs_diff_eq!(
            set.e_hh.sigma,
            2.0 * (p * m).sqrt() / total.powf(1.5),
            epsilon = 1e-12
        );
    }

    #[test]
    fn antidiagonal_recovery_on_exact_bell_tables() {
        let set = correlation_set(
            &standard_table(BellKind::PsiPlus),
            MeasurementConfig::StandardPi4,
        )
        .unwrap();
        let est = estimate_antidiagonals(&set).unwrap();
        assert_abs_diff_eq!(est.f_plus.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.d_plus.value, 0.0, epsilon = 1e-12);

        let zero = CorrelationSet {
            e_hh: Measured::exact(0.0),
            e_vv: Measured::exact(0.0),
            e_hv: Measured::exact(0.0),
            e_vh: Measured::exact(0.0),
            configuration: MeasurementConfig::StandardPi4,
        };
        let est = estimate_antidiagonals(&zero).unwrap();
        assert_eq!(est.values().as_array(), [0.0; 4]);
    }

    #[test]
    fn antidiagonal_recovery_rejects_chsh_sets() {
        let mut set = correlation_set(
            &standard_table(BellKind::PsiPlus),
            MeasurementConfig::StandardPi4,
        )
        .unwrap();
        set.configuration = MeasurementConfig::ChshPi4;
        assert!(matches!(
            estimate_antidiagonals(&set),
            Err(CorrelationError::Configuration { .. })
        ));
    }

    #[test]
    fn entanglement_test_thresholds() {
        let est = AntidiagonalEstimate {
            f_plus: Measured::new(0.96, 0.01),
            d_plus: Measured::new(0.0, 0.01),
            f_minus_im: Measured::new(0.0, 0.01),
            d_minus_im: Measured::new(0.0, 0.01),
        };
        let v = entanglement_test(&est, DEFAULT_SIGNIFICANCE);
        assert_eq!(v.entangled, Detection::Detected);
        assert_eq!(v.which_bound, WitnessBound::FBound);
        assert_abs_diff_eq!(v.z_score, 46.0, epsilon = 1e-9);

        let zero = AntidiagonalEstimate::exact(AntidiagonalSummary::default());
        assert_eq!(
            entanglement_test(&zero, 3.0).entangled,
            Detection::NotDetected
        );

        // Exact boundary: 0.5 is not strictly above the bound.
        let boundary = PolarizationState::bell(BellKind::PsiPlus)
            .white_noise(0.5)
            .unwrap()
            .antidiagonal_summary();
        let v = entanglement_test(&AntidiagonalEstimate::exact(boundary), 3.0);
        assert_eq!(v.entangled, Detection::NotDetected);

        let above = PolarizationState::bell(BellKind::PsiPlus)
            .white_noise(0.51)
            .unwrap()
            .antidiagonal_summary();
        let v = entanglement_test(&AntidiagonalEstimate::exact(above), 3.0);
        assert_eq!(v.entangled, Detection::Detected);
        assert_eq!(v.which_bound, WitnessBound::FBound);
    }

    #[test]
    fn inconclusive_when_statistics_are_thin() {
        let est = AntidiagonalEstimate {
            f_plus: Measured::new(0.55, 0.2),
            d_plus: Measured::new(0.1, 0.2),
            f_minus_im: Measured::new(0.0, 0.2),
            d_minus_im: Measured::new(0.0, 0.2),
        };
        assert_eq!(
            entanglement_test(&est, 3.0).entangled,
            Detection::Inconclusive
        );
    }

    #[test]
    fn bell_identification_gate() {
        let est = AntidiagonalEstimate {
            f_plus: Measured::new(0.96, 0.05),
            d_plus: Measured::new(0.08, 0.05),
            f_minus_im: Measured::new(0.01, 0.05),
            d_minus_im: Measured::new(-0.02, 0.05),
        };
        let id = identify_bell(&est, DEFAULT_SIGNIFICANCE);
        assert_eq!(id.best, Some(BellKind::PsiPlus));

        let blank = AntidiagonalEstimate::exact(AntidiagonalSummary::default());
        assert_eq!(identify_bell(&blank, 3.0).best, None);
    }

    #[test]
    fn exact_bell_kinds_identify_themselves() {
        for kind in BellKind::ALL {
            let est = AntidiagonalEstimate::exact(kind.signature());
            let id = identify_bell(&est, 3.0);
            assert_eq!(id.best, Some(kind));
            assert!(id.distance < 1e-12);
        }
    }

    #[test]
    fn fidelity_bound_values() {
        let b = fidelity_bounds(&BellKind::PsiPlus.signature());
        assert_eq!(
            (b.psi_plus, b.psi_minus, b.phi_plus, b.phi_minus),
            (1.0, 0.0, 0.0, 0.0)
        );
        let b = fidelity_bounds(&AntidiagonalSummary::default());
        assert_eq!(
            (b.psi_plus, b.psi_minus, b.phi_plus, b.phi_minus),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn chsh_parameters_for_exact_signatures() {
        let psi = CorrelationSet {
            // E' values of an ideal psi+ in the CHSH configuration.
            e_hh: Measured::exact(1.0 / SQRT_2),
            e_vv: Measured::exact(1.0 / SQRT_2),
            e_hv: Measured::exact(-1.0 / SQRT_2),
            e_vh: Measured::exact(1.0 / SQRT_2),
            configuration: MeasurementConfig::ChshPi4,
        };
        let params = chsh_bell_parameters(&psi).unwrap();
        assert_abs_diff_eq!(params.s_psi.value, TSIRELSON_BOUND, epsilon = 1e-12);
        assert_abs_diff_eq!(params.s_phi.value, 0.0, epsilon = 1e-12);

        let mixed = CorrelationSet {
            e_hh: Measured::exact(0.0),
            e_vv: Measured::exact(0.0),
            e_hv: Measured::exact(0.0),
            e_vh: Measured::exact(0.0),
            configuration: MeasurementConfig::ChshPi4,
        };
        let params = chsh_bell_parameters(&mixed).unwrap();
        assert_eq!((params.s_psi.value, params.s_phi.value), (0.0, 0.0));

        let standard = CorrelationSet {
            configuration: MeasurementConfig::StandardPi4,
            ..mixed
        };
        assert!(matches!(
            chsh_bell_parameters(&standard),
            Err(CorrelationError::Configuration { .. })
        ));
    }

    #[test]
    fn chsh_verdict_z_scores() {
        let params = BellParameters {
            s_psi: Measured::new(2.46, 0.26),
            s_phi: Measured::new(0.04, 0.26),
        };
        let v = chsh_verdict(&params);
        assert!(v.s_psi.violates_local_bound);
        assert!(v.s_psi.exceeds_separable_bound);
        assert_abs_diff_eq!(v.s_psi.z_local, (2.46 - 2.0) / 0.26, epsilon = 1e-12);
        assert_abs_diff_eq!(v.s_psi.z_separable, (2.46 - SQRT_2) / 0.26, epsilon = 1e-12);
        assert!((v.s_psi.z_local - 1.77).abs() < 0.01);
        assert!((v.s_psi.z_separable - 4.0).abs() < 0.03);
        assert!(!v.s_phi.violates_local_bound);

        let zero = BellParameters {
            s_psi: Measured::exact(0.0),
            s_phi: Measured::exact(0.0),
        };
        let v = chsh_verdict(&zero);
        assert!(!v.s_psi.violates_local_bound && !v.s_psi.exceeds_separable_bound);
    }

    #[test]
    fn standard_chsh_correlation_basics() {
        assert_abs_diff_eq!(
            standard_chsh_correlation(&[0.5, 0.5, 0.0, 0.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            standard_chsh_correlation(&[0.25; 4]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        assert!(standard_chsh_correlation(&[0.0; 4]).is_err());
    }

    #[test]
    fn singlet_rotation_correlation_matches_projector_oracle() {
        // Projective measurement of psi- along rotated linear polarizations:
        // E(a, b) = -cos 2(a-b).
        let rho = PolarizationState::bell(BellKind::PsiMinus);
        let basis = |angle: f64, which: Pol| -> Vector2<Complex64> {
            let (s, c) = angle.sin_cos();
            match which {
                Pol::H => Vector2::new(Complex64::new(c, 0.0), Complex64::new(s, 0.0)),
                Pol::V => Vector2::new(Complex64::new(-s, 0.0), Complex64::new(c, 0.0)),
            }
        };
        let (a, b) = (0.0, std::f64::consts::FRAC_PI_8);
        let mut probs = [0.0; 4];
        for (slot, (ja, sb)) in [
            (Pol::H, Pol::H),
            (Pol::V, Pol::V),
            (Pol::H, Pol::V),
            (Pol::V, Pol::H),
        ]
        .into_iter()
        .enumerate()
        {
            let ka = basis(a, ja);
            let kb = basis(b, sb);
            let mut joint = nalgebra::Vector4::zeros();
            for i in 0..2 {
                for j in 0..2 {
                    joint[2 * i + j] = ka[i] * kb[j];
                }
            }
            probs[slot] = (joint.adjoint() * rho.rho() * joint)[(0, 0)].re;
        }
        let e = standard_chsh_correlation(&probs).unwrap();
        assert_abs_diff_eq!(e, -(2.0 * (a - b)).cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(e, -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
    }
}
