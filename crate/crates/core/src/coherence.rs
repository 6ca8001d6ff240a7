//! l1-norm coherence of the stroke states in energy eigenbases.

use serde::{Deserialize, Serialize};

use crate::error::{OttoError, Result};
use crate::evolution::{lab_trajectory, propagator_lab, Stroke};
use crate::mat2::{eig_herm2, inner, DensityOp, EigenPair};
use crate::model::EngineParams;
use crate::thermal::{beta_from_population, gibbs_state};

/// Tolerance for accepting a basis as orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// `C_l1(ρ) = Σ_{i≠j} |ρ_ij|` in `basis`, which is `2|⟨ψ+|ρ|ψ−⟩|` for a qubit.
pub fn l1_coherence(rho: &DensityOp, basis: &EigenPair) -> Result<f64> {
    let (a, b) = (&basis.psi_plus, &basis.psi_minus);
    let defect = (inner(a, a).re - 1.0)
        .abs()
        .max((inner(b, b).re - 1.0).abs())
        .max(inner(a, b).norm());
    if defect > ORTHONORMAL_TOL {
        return Err(OttoError::param(
            "basis",
            format!("not orthonormal (defect {defect:e})"),
        ));
    }
    let off = rho.matrix().sandwich(a, b);
    Ok(2.0 * off.norm())
}

/// Coherence sampled along one stroke, `(t [s], C_l1)`, in the eigenbasis of
/// the instantaneous Hamiltonian.
pub type CoherenceSeries = Vec<(f64, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    /// Expanded state in the `H_hot` eigenbasis.
    pub c_exp: f64,
    /// Compressed state in the `H_cold` eigenbasis.
    pub c_comp: f64,
    pub expansion: Option<CoherenceSeries>,
    pub compression: Option<CoherenceSeries>,
}

impl CoherenceReport {
    /// Largest sampled value along the expansion stroke, if sampled.
    pub fn max_expansion(&self) -> Option<f64> {
        self.expansion.as_ref().map(|s| max_of(s))
    }

    pub fn max_compression(&self) -> Option<f64> {
        self.compression.as_ref().map(|s| max_of(s))
    }
}

fn max_of(series: &[(f64, f64)]) -> f64 {
    series.iter().map(|&(_, c)| c).fold(0.0, f64::max)
}

fn reservoir_states(params: &EngineParams) -> Result<(DensityOp, DensityOp)> {
    let beta_cold =
        beta_from_population(params.p_plus_cold(), params.nu_cold(), params.omega_tilde())?;
    let beta_hot =
        beta_from_population(params.p_plus_hot(), params.nu_hot(), params.omega_tilde())?;
    Ok((
        gibbs_state(&params.h_cold(), beta_cold)?,
        gibbs_state(&params.h_hot(), beta_hot)?,
    ))
}

/// End-of-stroke coherences of the expanded and compressed states.
pub fn stroke_coherence(params: &EngineParams, n_steps: usize) -> Result<CoherenceReport> {
    let (rho_cold, rho_hot) = reservoir_states(params)?;
    let u = propagator_lab(params, n_steps)?.u;
    let h_cold = params.h_cold();
    let h_hot = params.h_hot();
    let cold_basis = eig_herm2(&h_cold).require_nondegenerate(&h_cold)?;
    let hot_basis = eig_herm2(&h_hot).require_nondegenerate(&h_hot)?;
    Ok(CoherenceReport {
        c_exp: l1_coherence(&rho_cold.evolve(&u)?, &hot_basis)?,
        c_comp: l1_coherence(&rho_hot.evolve(&u.dagger())?, &cold_basis)?,
        expansion: None,
        compression: None,
    })
}

/// End-of-stroke values plus `n_samples + 1` samples along each stroke.
pub fn stroke_coherence_series(
    params: &EngineParams,
    n_steps: usize,
    n_samples: usize,
) -> Result<CoherenceReport> {
    let (rho_cold, rho_hot) = reservoir_states(params)?;
    let sample = |stroke: Stroke, rho0: &DensityOp| -> Result<CoherenceSeries> {
        lab_trajectory(params, stroke, n_steps, n_samples)?
            .into_iter()
            .map(|(t, u)| {
                let h = match stroke {
                    Stroke::Expansion => params.h_exp(t)?,
                    Stroke::Compression => params.h_comp(t)?,
                };
                let basis = eig_herm2(&h).require_nondegenerate(&h)?;
                Ok((t, l1_coherence(&rho0.evolve(&u)?, &basis)?))
            })
            .collect()
    };
    let expansion = sample(Stroke::Expansion, &rho_cold)?;
    let compression = sample(Stroke::Compression, &rho_hot)?;
    let mut report = stroke_coherence(params, n_steps)?;
    report.expansion = Some(expansion);
    report.compression = Some(compression);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::{Ket, C64};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn params(tau_us: f64, g: f64) -> EngineParams {
        EngineParams::nmr_reference(tau_us, g, 0.9).unwrap()
    }

    #[test]
    fn plus_state_is_maximally_coherent_in_z_basis() {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        let rho = DensityOp::pure(&[s, s]).unwrap();
        let z = eig_herm2(&crate::mat2::HermitianOp::pauli_z());
        assert!((l1_coherence(&rho, &z).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gibbs_states_are_incoherent_in_their_own_basis() {
        let p = params(100.0, 0.2);
        let (cold, hot) = reservoir_states(&p).unwrap();
        assert!(l1_coherence(&cold, &eig_herm2(&p.h_cold())).unwrap() < 1e-15);
        assert!(l1_coherence(&hot, &eig_herm2(&p.h_hot())).unwrap() < 1e-15);
    }

    #[test]
    fn skewed_basis_is_rejected() {
        let mut basis = eig_herm2(&params(100.0, 0.2).h_cold());
        basis.psi_minus = basis.psi_plus;
        assert!(l1_coherence(&DensityOp::maximally_mixed(), &basis).is_err());
    }

    #[test]
    fn series_start_and_end_points() {
        let p = params(140.0, 0.3);
        let report = stroke_coherence_series(&p, 2000, 40).unwrap();
        let exp = report.expansion.as_ref().unwrap();
        let comp = report.compression.as_ref().unwrap();
        assert_eq!(exp.len(), 41);
        // thermal states at the start of each unitary stroke
        assert!(exp[0].1 < 1e-14);
        assert!(comp[0].1 < 1e-14);
        assert!((exp[40].1 - report.c_exp).abs() < 1e-12);
        assert!((comp[40].1 - report.c_comp).abs() < 1e-12);
        assert!(report.max_expansion().unwrap() >= report.c_exp);
    }

    #[test]
    fn expansion_and_compression_differ() {
        let report = stroke_coherence(&params(100.0, 0.2), 4000).unwrap();
        assert!((report.c_exp - report.c_comp).abs() > 1e-3);
    }

    fn rephase(psi: &Ket, phi: f64) -> Ket {
        let z = C64::from_polar(1.0, phi);
        [psi[0] * z, psi[1] * z]
    }

    proptest! {
        #[test]
        fn coherence_ignores_eigenvector_phases(
            phi_plus in -3.2..3.2f64,
            phi_minus in -3.2..3.2f64,
            tau in 60.0..400.0f64,
            g in -0.5..1.0f64,
        ) {
            let p = params(tau, g);
            let u = propagator_lab(&p, 400).unwrap().u;
            let (cold, _) = reservoir_states(&p).unwrap();
            let rho = cold.evolve(&u).unwrap();
            let basis = eig_herm2(&p.h_hot());
            let mut shifted = basis;
            shifted.psi_plus = rephase(&basis.psi_plus, phi_plus);
            shifted.psi_minus = rephase(&basis.psi_minus, phi_minus);
            let a = l1_coherence(&rho, &basis).unwrap();
            let b = l1_coherence(&rho, &shifted).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            let m = rho.matrix().in_basis(&basis.psi_plus, &basis.psi_minus);
            let bound = 2.0 * (m.get(0, 0).re * m.get(1, 1).re).max(0.0).sqrt();
            prop_assert!(a <= bound + 1e-12 && bound <= 1.0 + 1e-12);
        }
    }
}
