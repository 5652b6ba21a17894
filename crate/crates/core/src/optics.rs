//! Interferometer model and detector-resolved coincidence probabilities.
//!
//! Each party's four modes are ordered (port0·H, port0·V, port1·H, port1·V);
//! the joint 16-mode basis is Alice-major (joint index 4·iA + iB). The input
//! photons occupy port 0 of each interferometer. One interferometer is the
//! operator M(φ) = (B⊗I)·(e^{iφ}Z ⊕ X)·(B⊗I): the beamsplitter B mixes
//! ports, the reflected path (port 0) carries the phase φ (with an extra
//! sign on vertical polarization in the Sagnac variant), and the transmitted
//! path flips polarization, which suppresses single-photon interference.

use nalgebra::{SMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;
use thiserror::Error;

use crate::states::{
    BellKind, CMat4, PolarizationState, EIGENVALUE_FLOOR, HERMITICITY_TOL, TRACE_TOL,
};

/// 16×16 complex matrix over the joint (port ⊗ polarization) modes.
pub type CMat16 = SMatrix<Complex64, 16, 16>;

/// Diagonal entries of a propagated state may dip this far below zero from
/// rounding; anything lower signals a defect upstream.
pub const NEGATIVE_DIAG_FLOOR: f64 = -1e-10;
/// A probability table must sum to 1 within this tolerance.
pub const PROBABILITY_SUM_TOL: f64 = 1e-9;
/// Both interferometer phases in the standard configuration.
pub const STANDARD_PHASE: f64 = FRAC_PI_4;
/// Vertical-mode pre-phase that turns the standard configuration into the
/// CHSH configuration.
pub const CHSH_PRE_PHASE: f64 = FRAC_PI_4;

#[derive(Debug, Error)]
pub enum OpticsError {
    #[error("diagonal entry {index} is {value:.3e}, below the negative floor")]
    NegativeProbability { index: usize, value: f64 },
    #[error("no closed-form probabilities for shifted Bell state {0}")]
    UnsupportedState(BellKind),
    #[error("closed-form probabilities require zero pre-phase (got {0})")]
    UnsupportedConfig(f64),
    #[error("mode matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("mode matrix trace {0} differs from 1 beyond tolerance")]
    TraceNotOne(f64),
    #[error("mode matrix has eigenvalue {0:.3e} below the PSD floor")]
    NotPositive(f64),
    #[error("table value {value} at channel {index} is negative")]
    NegativeValue { index: usize, value: f64 },
    #[error("probability table sums to {0}, not 1")]
    ProbabilitySum(f64),
    #[error("count tables require per-detector singles")]
    MissingSingles,
    #[error("interferometer phase is not finite")]
    NonFinitePhase,
}

/// Which interferometer realizes the phase arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Sagnac,
    MachZehnder,
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sagnac" => Ok(Variant::Sagnac),
            "mz" | "mach-zehnder" | "machzehnder" => Ok(Variant::MachZehnder),
            other => Err(format!("unknown interferometer variant '{other}'")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Sagnac => "sagnac",
            Variant::MachZehnder => "mach-zehnder",
        })
    }
}

/// Phase settings for the pair of interferometers.
///
/// `alice_pre_phase` is applied to the vertical component entering Alice's
/// interferometer; it is 0 in the standard configuration and π/4 in the CHSH
/// configuration, where it rotates the measured anti-diagonal combinations
/// so that the Bell parameters become 2√2(f+f*) and 2√2(d+d*).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerConfig {
    pub variant: Variant,
    pub alpha: f64,
    pub beta: f64,
    pub alice_pre_phase: f64,
}

impl InterferometerConfig {
    pub fn new(variant: Variant, alpha: f64, beta: f64) -> Self {
        Self {
            variant,
            alpha,
            beta,
            alice_pre_phase: 0.0,
        }
    }

    /// α = β = π/4, no pre-phase.
    pub fn standard(variant: Variant) -> Self {
        Self::new(variant, STANDARD_PHASE, STANDARD_PHASE)
    }

    /// Standard configuration plus the π/4 vertical pre-phase.
    pub fn chsh(variant: Variant) -> Self {
        Self::standard(variant).with_pre_phase(CHSH_PRE_PHASE)
    }

    pub fn with_pre_phase(mut self, phase: f64) -> Self {
        self.alice_pre_phase = phase;
        self
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        if self.alpha.is_finite() && self.beta.is_finite() && self.alice_pre_phase.is_finite() {
            Ok(())
        } else {
            Err(OpticsError::NonFinitePhase)
        }
    }
}

/// Density matrix over the joint 16-mode space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    rho16: CMat16,
}

impl ModeState {
    /// Validate and wrap a raw 16×16 density matrix.
    pub fn new(rho16: CMat16) -> Result<Self, OpticsError> {
        let herm = (rho16 - rho16.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > HERMITICITY_TOL {
            return Err(OpticsError::NotHermitian(herm));
        }
        let trace = rho16.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(OpticsError::TraceNotOne(trace.re));
        }
        let hermitized = (rho16 + rho16.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(hermitized);
        let min = eig
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < EIGENVALUE_FLOOR {
            return Err(OpticsError::NotPositive(min));
        }
        Ok(Self { rho16 })
    }

    pub fn rho16(&self) -> &CMat16 {
        &self.rho16
    }
}

fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// One party's 4×4 interferometer operator in mode order (p0H, p0V, p1H, p1V).
///
/// Entry ((y,s), (x,j)) sums the reflected path (input x to the phase arm
/// and out port y, polarization preserved) and the transmitted path, which
/// flips polarization. Beamsplitter reflections carry a factor i.
pub fn build_m(phi: f64, variant: Variant) -> CMat4 {
    let phase = Complex64::cis(phi);
    let mut m = CMat4::zeros();
    for y in 0..2u32 {
        for s in 0..2usize {
            for x in 0..2u32 {
                for j in 0..2usize {
                    let mut amp = Complex64::new(0.0, 0.0);
                    if s == j {
                        let z = if variant == Variant::Sagnac && j == 1 {
                            -1.0
                        } else {
                            1.0
                        };
                        amp += i_pow(2 - x - y) * phase * z;
                    }
                    if s != j {
                        amp += i_pow(x + y);
                    }
                    m[((2 * y) as usize + s, (2 * x) as usize + j)] = amp * 0.5;
                }
            }
        }
    }
    m
}

/// Kronecker product of two 4×4 party operators into the joint space.
pub fn kron4(a: &CMat4, b: &CMat4) -> CMat16 {
    let mut out = CMat16::zeros();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    out[(4 * i + k, 4 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Joint 16×16 unitary for the configured pair of interferometers.
pub fn build_u(config: &InterferometerConfig) -> CMat16 {
    let mut alice = build_m(config.alpha, config.variant);
    if config.alice_pre_phase != 0.0 {
        // Diagonal pre-phase on Alice's input-port vertical mode.
        let mut d = CMat4::identity();
        d[(1, 1)] = Complex64::cis(config.alice_pre_phase);
        alice *= d;
    }
    let bob = build_m(config.beta, config.variant);
    kron4(&alice, &bob)
}

/// Joint indices of the polarization basis when both photons sit in port 0.
const INPUT_MODES: [usize; 4] = [0, 1, 4, 5];

/// Place a polarization state into the 16-mode space, both photons in port 0.
pub fn embed(state: &PolarizationState) -> ModeState {
    let mut rho16 = CMat16::zeros();
    let rho = state.rho();
    for (r, &jr) in INPUT_MODES.iter().enumerate() {
        for (c, &jc) in INPUT_MODES.iter().enumerate() {
            rho16[(jr, jc)] = rho[(r, c)];
        }
    }
    ModeState { rho16 }
}

/// Conjugate the mode state by the configured joint unitary.
pub fn propagate(mode: &ModeState, config: &InterferometerConfig) -> ModeState {
    let u = build_u(config);
    ModeState {
        rho16: u * mode.rho16 * u.adjoint(),
    }
}

/// Detected polarization at a party: H or V.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub const BOTH: [Pol; 2] = [Pol::H, Pol::V];

    fn offset(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }
}

/// Index of a party-local detector (order H0, V0, H1, V1).
pub fn detector_index(pol: Pol, port: usize) -> usize {
    2 * port + pol.offset()
}

/// Index into the 16 coincidence channels (Alice-major).
pub fn channel_index(alice: usize, bob: usize) -> usize {
    4 * alice + bob
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    Probability,
    Count,
}

/// 16 coincidence values indexed by (Alice detector, Bob detector), plus
/// per-detector singles (marginals for probabilities, raw counts otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceTable {
    values: [f64; 16],
    kind: TableKind,
    singles: Option<[f64; 8]>,
}

impl CoincidenceTable {
    /// Channel keys in serialization order.
    pub const CHANNEL_KEYS: [&'static str; 16] = [
        "HA0HB0", "HA0VB0", "HA0HB1", "HA0VB1", "VA0HB0", "VA0VB0", "VA0HB1", "VA0VB1", "HA1HB0",
        "HA1VB0", "HA1HB1", "HA1VB1", "VA1HB0", "VA1VB0", "VA1HB1", "VA1VB1",
    ];
    /// Detector keys in serialization order (Alice then Bob).
    pub const DETECTOR_KEYS: [&'static str; 8] =
        ["HA0", "VA0", "HA1", "VA1", "HB0", "VB0", "HB1", "VB1"];

    pub fn from_probabilities(
        values: [f64; 16],
        singles: Option<[f64; 8]>,
    ) -> Result<Self, OpticsError> {
        for (index, &value) in values.iter().enumerate() {
            if value < 0.0 {
                return Err(OpticsError::NegativeValue { index, value });
            }
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(OpticsError::ProbabilitySum(sum));
        }
        Ok(Self {
            values,
            kind: TableKind::Probability,
            singles,
        })
    }

    pub fn from_counts(values: [f64; 16], singles: [f64; 8]) -> Result<Self, OpticsError> {
        for (index, &value) in values.iter().enumerate() {
            if value < 0.0 || !value.is_finite() {
                return Err(OpticsError::NegativeValue { index, value });
            }
        }
        Ok(Self {
            values,
            kind: TableKind::Count,
            singles: Some(singles),
        })
    }

    pub fn values(&self) -> &[f64; 16] {
        &self.values
    }

    pub fn value(&self, alice: usize, bob: usize) -> f64 {
        self.values[channel_index(alice, bob)]
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn singles(&self) -> Option<&[f64; 8]> {
        self.singles.as_ref()
    }

    /// The (y=z, y≠z) quadruple for one polarization pair, ordered
    /// [v(0,0), v(1,1), v(0,1), v(1,0)].
    pub fn quadruple(&self, alice_pol: Pol, bob_pol: Pol) -> [f64; 4] {
        let v = |y: usize, z: usize| {
            self.value(detector_index(alice_pol, y), detector_index(bob_pol, z))
        };
        [v(0, 0), v(1, 1), v(0, 1), v(1, 0)]
    }

    /// Per-detector marginals, Alice's four then Bob's four.
    pub fn marginals(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for a in 0..4 {
            for b in 0..4 {
                let v = self.value(a, b);
                out[a] += v;
                out[4 + b] += v;
            }
        }
        out
    }
}

/// Read the 16 diagonal coincidence probabilities off a propagated state.
///
/// Tiny negative diagonal entries (above [`NEGATIVE_DIAG_FLOOR`]) are clamped
/// to zero; anything lower is an error.
pub fn detection_probabilities(mode: &ModeState) -> Result<CoincidenceTable, OpticsError> {
    let mut values = [0.0; 16];
    for (index, value) in values.iter_mut().enumerate() {
        let p = mode.rho16[(index, index)].re;
        if p < NEGATIVE_DIAG_FLOOR {
            return Err(OpticsError::NegativeProbability { index, value: p });
        }
        *value = p.max(0.0);
    }
    let mut table = CoincidenceTable::from_probabilities(values, None)?;
    table.singles = Some(table.marginals());
    Ok(table)
}

/// Per-detector marginal probabilities of a propagated state.
pub fn singles_probabilities(mode: &ModeState) -> Result<[f64; 8], OpticsError> {
    Ok(detection_probabilities(mode)?.marginals())
}

/// Full pipeline: embed, propagate, read detector probabilities.
pub fn simulate_probabilities(
    state: &PolarizationState,
    config: &InterferometerConfig,
) -> Result<CoincidenceTable, OpticsError> {
    detection_probabilities(&propagate(&embed(state), config))
}

/// Closed-form coincidence table for an unshifted Bell state.
///
/// Sagnac: P = (1/16){1 ∓ ℓ(−1)^{y+z}cos(α ± mβ)}, the upper signs for
/// orthogonal detections (j≠s), the lower for parallel; the Mach-Zehnder
/// variant takes +ℓ in both branches. (ℓ, m) = Ψ±:{±1, 1}, Φ±:{±1, −1}.
pub fn analytic_bell_probabilities(
    kind: BellKind,
    config: &InterferometerConfig,
) -> Result<CoincidenceTable, OpticsError> {
    if kind.is_shifted() {
        return Err(OpticsError::UnsupportedState(kind));
    }
    if config.alice_pre_phase != 0.0 {
        return Err(OpticsError::UnsupportedConfig(config.alice_pre_phase));
    }
    let (ell, m) = match kind {
        BellKind::PsiPlus => (1.0, 1.0),
        BellKind::PsiMinus => (-1.0, 1.0),
        BellKind::PhiPlus => (1.0, -1.0),
        BellKind::PhiMinus => (-1.0, -1.0),
        _ => unreachable!(),
    };
    let orth_sign = match config.variant {
        Variant::Sagnac => -1.0,
        Variant::MachZehnder => 1.0,
    };
    let mut values = [0.0; 16];
    for a in 0..4 {
        for b in 0..4 {
            let (y, jv) = (a / 2, a % 2);
            let (z, sv) = (b / 2, b % 2);
            let parity = if (y + z) % 2 == 0 { 1.0 } else { -1.0 };
            let p = if jv != sv {
                1.0 + orth_sign * ell * parity * (config.alpha + m * config.beta).cos()
            } else {
                1.0 + ell * parity * (config.alpha - m * config.beta).cos()
            };
            values[channel_index(a, b)] = p / 16.0;
        }
    }
    let mut table = CoincidenceTable::from_probabilities(values, None)?;
    table.singles = Some(table.marginals());
    Ok(table)
}

/// Single-photon interference amplitudes at the standard configuration.
///
/// Each σ is a real combination of one party's reduced-state coherence; all
/// four vanish for Bell states, which is why their singles sit at exactly 1/4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalCoherences {
    pub sigma_ha: f64,
    pub sigma_va: f64,
    pub sigma_hb: f64,
    pub sigma_vb: f64,
}

/// Compute the four σ terms from a polarization state.
pub fn marginal_coherences(state: &PolarizationState) -> MarginalCoherences {
    let rho = state.rho();
    // Reduced coherences <H|rho_A|V> and <H|rho_B|V>.
    let w_a = rho[(0, 2)] + rho[(1, 3)];
    let w_b = rho[(0, 1)] + rho[(2, 3)];
    let sq = std::f64::consts::SQRT_2;
    MarginalCoherences {
        sigma_ha: sq * (w_a.im - w_a.re),
        sigma_va: sq * (w_a.re + w_a.im),
        sigma_hb: sq * (w_b.im - w_b.re),
        sigma_vb: sq * (w_b.re + w_b.im),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn max_entry_diff(a: &CMat4, b: &CMat4) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn unitarity_defect16(u: &CMat16) -> f64 {
        (u * u.adjoint() - CMat16::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    // Literal primitives assembled step by step, kept separate from build_m.
    mod oracle {
        use super::*;

        pub fn b() -> nalgebra::Matrix2<Complex64> {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            nalgebra::Matrix2::new(
                Complex64::new(0.0, s),
                Complex64::new(s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(0.0, s),
            )
        }

        pub fn x() -> nalgebra::Matrix2<Complex64> {
            nalgebra::Matrix2::new(
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            )
        }

        pub fn z() -> nalgebra::Matrix2<Complex64> {
            nalgebra::Matrix2::new(
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            )
        }

        pub fn kron22(a: &nalgebra::Matrix2<Complex64>, b: &nalgebra::Matrix2<Complex64>) -> CMat4 {
            let mut out = CMat4::zeros();
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                        }
                    }
                }
            }
            out
        }

        pub fn direct_sum(
            a: &nalgebra::Matrix2<Complex64>,
            b: &nalgebra::Matrix2<Complex64>,
        ) -> CMat4 {
            let mut out = CMat4::zeros();
            for i in 0..2 {
                for j in 0..2 {
                    out[(i, j)] = a[(i, j)];
                    out[(2 + i, 2 + j)] = b[(i, j)];
                }
            }
            out
        }

        pub fn m(phi: f64, variant: Variant) -> CMat4 {
            let arm = match variant {
                Variant::Sagnac => z(),
                Variant::MachZehnder => nalgebra::Matrix2::identity(),
            };
            let phased = arm.map(|e| e * Complex64::cis(phi));
            let bi = kron22(&b(), &nalgebra::Matrix2::identity());
            bi * direct_sum(&phased, &x()) * bi
        }
    }

    #[test]
    fn build_m_matches_primitive_assembly() {
        for variant in [Variant::Sagnac, Variant::MachZehnder] {
            for phi in [0.0, 0.3, FRAC_PI_2, 1.9, PI, 5.5] {
                let diff = max_entry_diff(&build_m(phi, variant), &oracle::m(phi, variant));
                assert!(diff < 1e-15, "{variant} phi={phi}: diff {diff:.3e}");
            }
        }
    }

    #[test]
    fn sagnac_and_mz_differ_only_via_the_phase_arm() {
        let phi = FRAC_PI_2;
        let sag = build_m(phi, Variant::Sagnac);
        let mz = build_m(phi, Variant::MachZehnder);
        assert!(max_entry_diff(&sag, &mz) > 0.1);
        assert!(max_entry_diff(&sag, &oracle::m(phi, Variant::Sagnac)) < 1e-15);
        assert!(max_entry_diff(&mz, &oracle::m(phi, Variant::MachZehnder)) < 1e-15);
    }

    #[test]
    fn build_m_is_unitary() {
        for variant in [Variant::Sagnac, Variant::MachZehnder] {
            for k in 0..24 {
                let phi = k as f64 * 0.37;
                let m = build_m(phi, variant);
                let defect = (m * m.adjoint() - CMat4::identity())
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                assert!(defect < 1e-12);
            }
        }
    }

    #[test]
    fn build_u_reduces_to_kronecker_without_pre_phase() {
        let config = InterferometerConfig::new(Variant::Sagnac, 0.0, 0.0);
        let u = build_u(&config);
        let expect = kron4(
            &build_m(0.0, Variant::Sagnac),
            &build_m(0.0, Variant::Sagnac),
        );
        let diff = (u - expect).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-15);
    }

    #[test]
    fn build_u_is_unitary_for_random_configs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..100 {
            let config = InterferometerConfig {
                variant: if rng.random::<bool>() {
                    Variant::Sagnac
                } else {
                    Variant::MachZehnder
                },
                alpha: rng.random_range(-10.0..10.0),
                beta: rng.random_range(-10.0..10.0),
                alice_pre_phase: rng.random_range(-PI..PI),
            };
            assert!(unitarity_defect16(&build_u(&config)) < 1e-12);
        }
    }

    #[test]
    fn embed_places_state_at_port_zero() {
        let psi = PolarizationState::bell(BellKind::PsiPlus);
        let mode = embed(&psi);
        let r = mode.rho16();
        for (idx, expected) in [((1, 1), 0.5), ((1, 4), 0.5), ((4, 1), 0.5), ((4, 4), 0.5)] {
            assert_abs_diff_eq!(r[idx].re, expected, epsilon = 1e-15);
        }
        let nonzero: f64 = r.iter().map(|z| z.norm()).sum();
        assert_abs_diff_eq!(nonzero, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn embed_round_trips_the_polarization_block() {
        let state = PolarizationState::bell(BellKind::PhiMinusShifted)
            .white_noise(0.7)
            .unwrap();
        let mode = embed(&state);
        for (r, &jr) in INPUT_MODES.iter().enumerate() {
            for (c, &jc) in INPUT_MODES.iter().enumerate() {
                assert_eq!(mode.rho16()[(jr, jc)], state.rho()[(r, c)]);
            }
        }
    }

    #[test]
    fn embed_maximally_mixed_diagonal() {
        let mode = embed(&PolarizationState::maximally_mixed());
        for idx in 0..16 {
            let expected = if INPUT_MODES.contains(&idx) {
                0.25
            } else {
                0.0
            };
            assert_abs_diff_eq!(mode.rho16()[(idx, idx)].re, expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn propagation_round_trip_restores_input() {
        let config = InterferometerConfig::chsh(Variant::Sagnac);
        let state = PolarizationState::bell(BellKind::PsiMinus)
            .white_noise(0.9)
            .unwrap();
        let mode = embed(&state);
        let forward = propagate(&mode, &config);
        let u = build_u(&config);
        let back = ModeState::new(u.adjoint() * forward.rho16() * u).unwrap();
        let diff = (back.rho16() - mode.rho16())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn mz_zero_phase_coincidences() {
        // Mach-Zehnder at alpha = beta = 0: orthogonal detections with equal
        // ports at 1/8, mixed ports dark.
        let config = InterferometerConfig::new(Variant::MachZehnder, 0.0, 0.0);
        let table =
            simulate_probabilities(&PolarizationState::bell(BellKind::PsiPlus), &config).unwrap();
        for y in 0..2 {
            for z in 0..2 {
                let hv = table.value(detector_index(Pol::H, y), detector_index(Pol::V, z));
                let expected = if y == z { 0.125 } else { 0.0 };
                assert_abs_diff_eq!(hv, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn standard_sagnac_psi_plus_probabilities() {
        let table = simulate_probabilities(
            &PolarizationState::bell(BellKind::PsiPlus),
            &InterferometerConfig::standard(Variant::Sagnac),
        )
        .unwrap();
        assert_abs_diff_eq!(table.value(0, 0), 0.125, epsilon = 1e-12);
        assert_abs_diff_eq!(table.value(0, 3), 0.0625, epsilon = 1e-12);
        let sum: f64 = table.values().iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn maximally_mixed_is_uniform_for_any_config() {
        let config = InterferometerConfig::new(Variant::Sagnac, 1.234, -0.777);
        let table = simulate_probabilities(&PolarizationState::maximally_mixed(), &config).unwrap();
        for &v in table.values() {
            assert_abs_diff_eq!(v, 1.0 / 16.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn analytic_rejects_shifted_kinds_and_pre_phase() {
        let config = InterferometerConfig::standard(Variant::Sagnac);
        assert!(matches!(
            analytic_bell_probabilities(BellKind::PsiPlusShifted, &config),
            Err(OpticsError::UnsupportedState(_))
        ));
        assert!(matches!(
            analytic_bell_probabilities(
                BellKind::PsiPlus,
                &InterferometerConfig::chsh(Variant::Sagnac)
            ),
            Err(OpticsError::UnsupportedConfig(_))
        ));
    }

    #[test]
    fn analytic_matches_propagation_spot_check() {
        let config = InterferometerConfig::new(Variant::Sagnac, PI / 3.0, PI / 5.0);
        let analytic = analytic_bell_probabilities(BellKind::PhiPlus, &config).unwrap();
        let propagated =
            simulate_probabilities(&PolarizationState::bell(BellKind::PhiPlus), &config).unwrap();
        for (a, p) in analytic.values().iter().zip(propagated.values()) {
            assert_abs_diff_eq!(a, p, epsilon = 1e-12);
        }
    }

    #[test]
    fn psi_minus_analytic_flips_the_cosine() {
        let config = InterferometerConfig::new(Variant::Sagnac, 0.9, 0.4);
        let plus = analytic_bell_probabilities(BellKind::PsiPlus, &config).unwrap();
        let minus = analytic_bell_probabilities(BellKind::PsiMinus, &config).unwrap();
        for (p, m) in plus.values().iter().zip(minus.values()) {
            assert_abs_diff_eq!(p + m, 1.0 / 8.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn bell_singles_are_flat() {
        let config = InterferometerConfig::new(Variant::Sagnac, 2.2, 0.15);
        for kind in BellKind::ALL {
            let mode = propagate(&embed(&PolarizationState::bell(kind)), &config);
            for p in singles_probabilities(&mode).unwrap() {
                assert_abs_diff_eq!(p, 0.25, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn separable_singles_follow_the_marginal_coherences() {
        let state = PolarizationState::separable_pure(FRAC_PI_2 / 2.0, 0.0, FRAC_PI_2 / 2.0, 0.0);
        let mode = propagate(
            &embed(&state),
            &InterferometerConfig::standard(Variant::Sagnac),
        );
        let singles = singles_probabilities(&mode).unwrap();
        let sigma = marginal_coherences(&state);
        assert_abs_diff_eq!(singles[0], (1.0 + sigma.sigma_ha) / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(singles[2], (1.0 - sigma.sigma_ha) / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(singles[5], (1.0 + sigma.sigma_vb) / 4.0, epsilon = 1e-12);
        // The polarization flip on the transmitted arm balances the two
        // ports: each detected polarization totals 1/2 per party, which for
        // this symmetric state equals its input H weight.
        let rho = state.rho();
        let h_weight = rho[(0, 0)].re + rho[(1, 1)].re;
        assert_abs_diff_eq!(singles[0] + singles[2], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(h_weight, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn quadruple_ordering() {
        let table = analytic_bell_probabilities(
            BellKind::PsiPlus,
            &InterferometerConfig::standard(Variant::Sagnac),
        )
        .unwrap();
        let q = table.quadruple(Pol::H, Pol::H);
        assert_abs_diff_eq!(q[0], table.value(0, 0), epsilon = 1e-15);
        assert_abs_diff_eq!(q[1], table.value(2, 2), epsilon = 1e-15);
        assert_abs_diff_eq!(q[2], table.value(0, 2), epsilon = 1e-15);
        assert_abs_diff_eq!(q[3], table.value(2, 0), epsilon = 1e-15);
    }

    #[test]
    fn detection_rejects_large_negative_diagonals() {
        let mut rho16 = embed(&PolarizationState::maximally_mixed()).rho16;
        rho16[(0, 0)] = Complex64::new(-1e-6, 0.0);
        rho16[(1, 1)] += Complex64::new(0.25 + 1e-6, 0.0);
        let mode = ModeState { rho16 };
        assert!(matches!(
            detection_probabilities(&mode),
            Err(OpticsError::NegativeProbability { .. })
        ));
    }

    #[test]
    fn mode_state_validation() {
        let good = embed(&PolarizationState::bell(BellKind::PhiPlus));
        assert!(ModeState::new(*good.rho16()).is_ok());
        let mut bad = *good.rho16();
        bad[(0, 3)] = Complex64::new(0.4, 0.0);
        assert!(ModeState::new(bad).is_err());
    }
}
