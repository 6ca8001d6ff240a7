//! Gibbs states and the population ↔ inverse spin temperature map.
//!
//! Populations above one half give a negative β: the excited level is more
//! occupied than the ground level, an effective negative spin temperature.

use serde::{Deserialize, Serialize};

use crate::error::{OttoError, Result};
use crate::mat2::{eig_herm2, DensityOp, HermitianOp, Mat2, C64};
use crate::model::units::PLANCK;

/// Inverse spin temperature in 1/(h·Hz). The sign is unrestricted.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SpinTemperature(pub f64);

impl SpinTemperature {
    pub fn beta(self) -> f64 {
        self.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0.0
    }
}

/// `β = ln((1 − p⁺)/p⁺) / (h·√(ν² + (ω̃/2π)²))`.
///
/// `p⁺ = 0.5` maps to β = 0 exactly.
pub fn beta_from_population(p_plus: f64, nu: f64, omega_tilde: f64) -> Result<SpinTemperature> {
    if !(p_plus > 0.0 && p_plus < 1.0) {
        return Err(OttoError::param(
            "p_plus",
            format!("population must lie in (0, 1), got {p_plus}"),
        ));
    }
    let w = omega_tilde / (2.0 * std::f64::consts::PI);
    let denom = PLANCK * (nu * nu + w * w).sqrt();
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(OttoError::param("nu", "level splitting must be positive"));
    }
    if p_plus == 0.5 {
        return Ok(SpinTemperature(0.0));
    }
    Ok(SpinTemperature(((1.0 - p_plus) / p_plus).ln() / denom))
}

/// `tanh(βE)` of a Gibbs state with excited population `p⁺`, exactly `1 − 2p⁺`.
pub fn tanh_beta_energy(p_plus: f64) -> f64 {
    1.0 - 2.0 * p_plus
}

/// Excited-state population `⟨Ψ+|ρ|Ψ+⟩` with respect to `h`.
pub fn population_from_state(rho: &DensityOp, h: &HermitianOp) -> Result<f64> {
    let eig = eig_herm2(h).require_nondegenerate(h)?;
    Ok(rho.expectation(&eig.psi_plus).clamp(0.0, 1.0))
}

/// `e^{−βH}/Z`, built in the eigenbasis of `h` with analytically normalized
/// populations.
pub fn gibbs_state(h: &HermitianOp, beta: SpinTemperature) -> Result<DensityOp> {
    let eig = eig_herm2(h).require_nondegenerate(h)?;
    let x = 2.0 * beta.0 * eig.half_gap();
    // p± = 1 / (1 + e^{±2βE})
    let p_plus = logistic(x);
    let p_minus = logistic(-x);
    let m = Mat2::outer(&eig.psi_plus, &eig.psi_plus).scale(C64::new(p_plus, 0.0))
        + Mat2::outer(&eig.psi_minus, &eig.psi_minus).scale(C64::new(p_minus, 0.0));
    DensityOp::new(m)
}

/// Gibbs state with prescribed excited population; for `p⁺ ≠ 0.5` this is the
/// state reached through `β(p⁺)`.
pub fn gibbs_state_from_population(h: &HermitianOp, p_plus: f64) -> Result<DensityOp> {
    let eig = eig_herm2(h).require_nondegenerate(h)?;
    let m = Mat2::outer(&eig.psi_plus, &eig.psi_plus).scale(C64::new(p_plus, 0.0))
        + Mat2::outer(&eig.psi_minus, &eig.psi_minus).scale(C64::new(1.0 - p_plus, 0.0));
    DensityOp::new(m)
}

/// `Z = Tr e^{−βH} = e^{−βa0}·2cosh(βE)`; for the traceless engine
/// Hamiltonians this is `2cosh(βE)`.
pub fn partition_function(h: &HermitianOp, beta: SpinTemperature) -> f64 {
    let e = h.magnitude();
    (-beta.0 * h.a0).exp() * 2.0 * (beta.0 * e).cosh()
}

/// `1/(1 + e^{x})`, stable for large |x|.
fn logistic(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}
