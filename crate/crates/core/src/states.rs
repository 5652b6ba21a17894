//! Two-photon polarization density matrices.
//!
//! States live in the basis (|HH⟩, |HV⟩, |VH⟩, |VV⟩), first letter Alice,
//! second Bob. The anti-diagonal coherences d = ⟨HH|ρ|VV⟩ and f = ⟨HV|ρ|VH⟩
//! are the observables the interferometer is sensitive to; everything in
//! [`AntidiagonalSummary`] derives from them.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 4×4 complex matrix over the two-photon polarization basis.
pub type CMat4 = Matrix4<Complex64>;
/// Two-photon polarization ket.
pub type CVec4 = Vector4<Complex64>;

/// Maximum allowed deviation from Hermiticity, entrywise.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Maximum allowed deviation of the trace from 1.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalue floor for positive semi-definiteness. Measured or fitted
/// matrices can be marginally indefinite; anything below this is rejected.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;
/// Tolerance on mixture weights summing to 1.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error)]
pub enum StateError {
    #[error("matrix is not Hermitian (max |rho - rho^†| entry = {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix trace {0} differs from 1 beyond tolerance")]
    TraceNotOne(f64),
    #[error("matrix has eigenvalue {0:.3e} below the PSD floor")]
    NotPositive(f64),
    #[error("mixture weights must be nonnegative and sum to 1 (got sum {sum}, min {min})")]
    Weight { sum: f64, min: f64 },
    #[error("mixture needs equally many states and weights, at least one of each")]
    MixInput,
    #[error("noise fraction {0} outside [0, 1]")]
    Range(f64),
}

/// The eight maximally entangled two-photon states the interferometer can
/// distinguish: Ψ± and Φ± plus their phase-shifted variants, which carry a
/// relative phase i instead of ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellKind {
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+s")]
    PsiPlusShifted,
    #[serde(rename = "psi-s")]
    PsiMinusShifted,
    #[serde(rename = "phi+s")]
    PhiPlusShifted,
    #[serde(rename = "phi-s")]
    PhiMinusShifted,
}

impl BellKind {
    pub const ALL: [BellKind; 8] = [
        BellKind::PsiPlus,
        BellKind::PsiMinus,
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlusShifted,
        BellKind::PsiMinusShifted,
        BellKind::PhiPlusShifted,
        BellKind::PhiMinusShifted,
    ];

    /// The four states with a real ±1 relative phase.
    pub const UNSHIFTED: [BellKind; 4] = [
        BellKind::PsiPlus,
        BellKind::PsiMinus,
        BellKind::PhiPlus,
        BellKind::PhiMinus,
    ];

    pub fn is_shifted(self) -> bool {
        matches!(
            self,
            BellKind::PsiPlusShifted
                | BellKind::PsiMinusShifted
                | BellKind::PhiPlusShifted
                | BellKind::PhiMinusShifted
        )
    }

    /// State vector in the (HH, HV, VH, VV) basis.
    pub fn ket(self) -> CVec4 {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let (hh, hv, vh, vv) = match self {
            BellKind::PsiPlus => (C_ZERO, s, s, C_ZERO),
            BellKind::PsiMinus => (C_ZERO, s, -s, C_ZERO),
            BellKind::PhiPlus => (s, C_ZERO, C_ZERO, s),
            BellKind::PhiMinus => (s, C_ZERO, C_ZERO, -s),
            BellKind::PsiPlusShifted => (C_ZERO, s, i * s, C_ZERO),
            BellKind::PsiMinusShifted => (C_ZERO, s, -i * s, C_ZERO),
            BellKind::PhiPlusShifted => (s, C_ZERO, C_ZERO, i * s),
            BellKind::PhiMinusShifted => (s, C_ZERO, C_ZERO, -i * s),
        };
        Vector4::new(hh, hv, vh, vv)
    }

    /// The anti-diagonal signature of this state: exactly one of the four
    /// summary components is ±1, the rest 0.
    pub fn signature(self) -> AntidiagonalSummary {
        let mut s = AntidiagonalSummary::default();
        match self {
            BellKind::PsiPlus => s.f_plus = 1.0,
            BellKind::PsiMinus => s.f_plus = -1.0,
            BellKind::PhiPlus => s.d_plus = 1.0,
            BellKind::PhiMinus => s.d_plus = -1.0,
            BellKind::PsiPlusShifted => s.f_minus_im = 1.0,
            BellKind::PsiMinusShifted => s.f_minus_im = -1.0,
            BellKind::PhiPlusShifted => s.d_minus_im = 1.0,
            BellKind::PhiMinusShifted => s.d_minus_im = -1.0,
        }
        s
    }

    pub fn name(self) -> &'static str {
        match self {
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
            BellKind::PsiPlusShifted => "psi+s",
            BellKind::PsiMinusShifted => "psi-s",
            BellKind::PhiPlusShifted => "phi+s",
            BellKind::PhiMinusShifted => "phi-s",
        }
    }
}

impl std::fmt::Display for BellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BellKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s.to_ascii_lowercase().as_str() {
            "psi+" | "psi_plus" => BellKind::PsiPlus,
            "psi-" | "psi_minus" => BellKind::PsiMinus,
            "phi+" | "phi_plus" => BellKind::PhiPlus,
            "phi-" | "phi_minus" => BellKind::PhiMinus,
            "psi+s" | "psi_plus_shifted" => BellKind::PsiPlusShifted,
            "psi-s" | "psi_minus_shifted" => BellKind::PsiMinusShifted,
            "phi+s" | "phi_plus_shifted" => BellKind::PhiPlusShifted,
            "phi-s" | "phi_minus_shifted" => BellKind::PhiMinusShifted,
            other => return Err(format!("unknown Bell state '{other}'")),
        };
        Ok(kind)
    }
}

/// Real combinations of the anti-diagonal matrix elements:
/// f+f*, d+d*, i(f−f*), i(d−d*).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AntidiagonalSummary {
    pub f_plus: f64,
    pub d_plus: f64,
    pub f_minus_im: f64,
    pub d_minus_im: f64,
}

impl AntidiagonalSummary {
    pub fn as_array(&self) -> [f64; 4] {
        [self.f_plus, self.d_plus, self.f_minus_im, self.d_minus_im]
    }
}

/// A validated 4×4 two-photon polarization density matrix.
///
/// Invariants enforced on construction: Hermitian within [`HERMITICITY_TOL`],
/// unit trace within [`TRACE_TOL`], eigenvalues above [`EIGENVALUE_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationState {
    rho: CMat4,
    label: Option<String>,
}

impl PolarizationState {
    /// Validate and wrap a raw density matrix.
    pub fn new(rho: CMat4) -> Result<Self, StateError> {
        let herm = (rho - rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > HERMITICITY_TOL {
            return Err(StateError::NotHermitian(herm));
        }
        let trace = rho.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(StateError::TraceNotOne(trace.re));
        }
        let min_eig = hermitian_eigenvalues(&rho)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < EIGENVALUE_FLOOR {
            return Err(StateError::NotPositive(min_eig));
        }
        Ok(Self { rho, label: None })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn rho(&self) -> &CMat4 {
        &self.rho
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Pure-state density matrix |ψ⟩⟨ψ| of the requested Bell state.
    ///
    /// Built from exact 1/2 entries rather than the ket outer product, so
    /// the ±1 signatures and the 1/2 boundary tests hold without rounding.
    pub fn bell(kind: BellKind) -> Self {
        let half = Complex64::new(0.5, 0.0);
        // Relative phase of the second ket component.
        let phase = match kind {
            BellKind::PsiPlus | BellKind::PhiPlus => Complex64::new(1.0, 0.0),
            BellKind::PsiMinus | BellKind::PhiMinus => Complex64::new(-1.0, 0.0),
            BellKind::PsiPlusShifted | BellKind::PhiPlusShifted => Complex64::new(0.0, 1.0),
            BellKind::PsiMinusShifted | BellKind::PhiMinusShifted => Complex64::new(0.0, -1.0),
        };
        let mut rho = CMat4::zeros();
        let (first, second) = match kind {
            BellKind::PsiPlus
            | BellKind::PsiMinus
            | BellKind::PsiPlusShifted
            | BellKind::PsiMinusShifted => (1, 2),
            _ => (0, 3),
        };
        rho[(first, first)] = half;
        rho[(second, second)] = half;
        rho[(first, second)] = half * phase.conj();
        rho[(second, first)] = half * phase;
        Self {
            rho,
            label: Some(kind.name().to_string()),
        }
    }

    /// The maximally mixed state I/4.
    pub fn maximally_mixed() -> Self {
        Self {
            rho: CMat4::identity() * Complex64::new(0.25, 0.0),
            label: Some("maximally mixed".to_string()),
        }
    }

    /// Product of two single-photon pure states, each parameterized as
    /// (sin a)|H⟩ + (cos a)e^{iθ}|V⟩.
    pub fn separable_pure(a: f64, theta_a: f64, b: f64, theta_b: f64) -> Self {
        let alice = pure_qubit(a, theta_a);
        let bob = pure_qubit(b, theta_b);
        Self {
            rho: kron2(&alice, &bob),
            label: None,
        }
    }

    /// (|HV⟩ + e^{iθ}|VH⟩)/√2. Its summary has f+f* = cos θ.
    pub fn psi_theta(theta: f64) -> Self {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let k = Vector4::new(C_ZERO, s, s * Complex64::cis(theta), C_ZERO);
        Self {
            rho: k * k.adjoint(),
            label: Some(format!("psi(theta={theta})")),
        }
    }

    /// (|HH⟩ + e^{iγ}|VV⟩)/√2. Its summary has d+d* = cos γ.
    pub fn phi_gamma(gamma: f64) -> Self {
        let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let k = Vector4::new(s, C_ZERO, C_ZERO, s * Complex64::cis(gamma));
        Self {
            rho: k * k.adjoint(),
            label: Some(format!("phi(gamma={gamma})")),
        }
    }

    /// Convex combination Σ wᵢ ρᵢ. Weights must be nonnegative and sum to 1.
    pub fn mix(states: &[PolarizationState], weights: &[f64]) -> Result<Self, StateError> {
        if states.is_empty() || states.len() != weights.len() {
            return Err(StateError::MixInput);
        }
        let sum: f64 = weights.iter().sum();
        let min = weights.iter().copied().fold(f64::INFINITY, f64::min);
        if min < 0.0 || (sum - 1.0).abs() > WEIGHT_SUM_TOL || !sum.is_finite() {
            return Err(StateError::Weight { sum, min });
        }
        let mut rho = CMat4::zeros();
        for (state, &w) in states.iter().zip(weights) {
            rho += state.rho * Complex64::new(w, 0.0);
        }
        Ok(Self { rho, label: None })
    }

    /// p·ρ + (1−p)·I/4.
    pub fn white_noise(&self, p: f64) -> Result<Self, StateError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(StateError::Range(p));
        }
        let rho = self.rho * Complex64::new(p, 0.0)
            + CMat4::identity() * Complex64::new((1.0 - p) / 4.0, 0.0);
        Ok(Self {
            rho,
            label: self.label.clone(),
        })
    }

    /// Read off d = ρ(1,4) and f = ρ(2,3) (1-based) and fold them into the
    /// four real observables.
    pub fn antidiagonal_summary(&self) -> AntidiagonalSummary {
        let d = self.rho[(0, 3)];
        let f = self.rho[(1, 2)];
        AntidiagonalSummary {
            f_plus: 2.0 * f.re,
            d_plus: 2.0 * d.re,
            f_minus_im: -2.0 * f.im,
            d_minus_im: -2.0 * d.im,
        }
    }

    /// Absolute sum of the negative eigenvalues of the partial transpose.
    ///
    /// Zero exactly for separable two-qubit states and positive otherwise,
    /// so this serves as an independent entanglement oracle in tests.
    pub fn negativity(&self) -> f64 {
        let pt = partial_transpose(&self.rho);
        hermitian_eigenvalues(&pt)
            .into_iter()
            .filter(|&e| e < 0.0)
            .map(f64::abs)
            .sum()
    }

    /// Overlap ⟨bell|ρ|bell⟩ with the given Bell state.
    pub fn bell_fidelity(&self, kind: BellKind) -> f64 {
        let k = kind.ket();
        (k.adjoint() * self.rho * k)[(0, 0)].re
    }
}

/// Transpose the Bob factor of a 4×4 two-qubit matrix.
pub fn partial_transpose(rho: &CMat4) -> CMat4 {
    let mut pt = CMat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    pt[(2 * i + j, 2 * k + l)] = rho[(2 * i + l, 2 * k + j)];
                }
            }
        }
    }
    pt
}

/// Eigenvalues of the Hermitian part of `m`.
pub(crate) fn hermitian_eigenvalues(m: &CMat4) -> [f64; 4] {
    let herm = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    [
        eig.eigenvalues[0],
        eig.eigenvalues[1],
        eig.eigenvalues[2],
        eig.eigenvalues[3],
    ]
}

fn pure_qubit(angle: f64, phase: f64) -> Matrix2<Complex64> {
    let ket = nalgebra::Vector2::new(
        Complex64::new(angle.sin(), 0.0),
        Complex64::new(angle.cos(), 0.0) * Complex64::cis(phase),
    );
    ket * ket.adjoint()
}

fn kron2(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> CMat4 {
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
