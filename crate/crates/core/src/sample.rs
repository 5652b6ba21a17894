//! Random state generation for property tests and Monte Carlo studies.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{PI, TAU};

use crate::states::{CMat4, PolarizationState};

/// Random full-rank density matrix: ρ = GG†/tr(GG†) with Ginibre G.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R) -> PolarizationState {
    let mut g = CMat4::zeros();
    for entry in g.iter_mut() {
        *entry = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    }
    let rho = g * g.adjoint();
    let trace = rho.trace().re;
    PolarizationState::new(rho / Complex64::new(trace, 0.0))
        .expect("normalized Gram matrix is a density matrix")
}

/// Random pure product state, angles uniform on [0, π) and phases on [0, 2π).
pub fn random_pure_product<R: Rng + ?Sized>(rng: &mut R) -> PolarizationState {
    PolarizationState::separable_pure(
        rng.random_range(0.0..PI),
        rng.random_range(0.0..TAU),
        rng.random_range(0.0..PI),
        rng.random_range(0.0..TAU),
    )
}

/// Random separable mixed state: up to `max_terms` random product states
/// under random convex weights.
pub fn random_separable_mixture<R: Rng + ?Sized>(
    rng: &mut R,
    max_terms: usize,
) -> PolarizationState {
    let terms = rng.random_range(1..=max_terms.max(1));
    let states: Vec<PolarizationState> = (0..terms).map(|_| random_pure_product(rng)).collect();
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    PolarizationState::mix(&states, &weights).expect("normalized weights")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn random_states_satisfy_invariants() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..50 {
            let rho = random_density_matrix(&mut rng);
            assert!(PolarizationState::new(*rho.rho()).is_ok());
            let sep = random_separable_mixture(&mut rng, 8);
            assert!(sep.negativity() < 1e-10);
        }
    }

    #[test]
    fn product_states_are_ppt() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for _ in 0..100 {
            assert!(random_pure_product(&mut rng).negativity() < 1e-10);
        }
    }
}
