//! Propagator of the expansion stroke and the transition probability.
//!
//! Two independent routes produce `U(τ, 0)`:
//!
//! * [`propagator_lab`]: a product of exact midpoint exponentials of the lab
//!   frame Hamiltonian. Every factor is exactly unitary, so unitarity cannot
//!   drift and the error is second order in the step.
//! * [`propagator_rotating`]: RK4 integration of the two coupled amplitudes
//!   `D±` in the frame co-rotating with the in-plane field, with the phase
//!   `J(t)` in closed form, mapped back to the lab frame.
//!
//! At `g = 1` the rotating-frame coupling vanishes and
//! [`analytic_propagator_g1`] gives the propagator without integration.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{OttoError, Result};
use crate::mat2::{eig_herm2, expm_i_herm2, EigenPair, HermitianOp, UnitaryOp, C64};
use crate::model::EngineParams;

/// Default number of substeps for driving times up to 400 μs.
pub const DEFAULT_STEPS: usize = 20_000;

/// Smallest accepted step count.
pub const MIN_STEPS: usize = 100;

/// Largest accepted `max|U†U − I|`.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Tolerance on the agreement of the two matrix elements defining ξ.
pub const XI_SYMMETRY_TOL: f64 = 1e-12;

/// Outcome of a propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorResult {
    pub u: UnitaryOp,
    pub n_steps: usize,
    /// `max|U†U − I|`
    pub unitarity_defect: f64,
}

impl PropagatorResult {
    fn accept(u: UnitaryOp, n_steps: usize) -> Result<Self> {
        if !u.is_finite() {
            return Err(OttoError::Integration("non-finite propagator".into()));
        }
        let unitarity_defect = u.unitarity_defect();
        if !(unitarity_defect < UNITARITY_TOL) {
            return Err(OttoError::Integration(format!(
                "unitarity defect {unitarity_defect:e} after {n_steps} steps"
            )));
        }
        Ok(PropagatorResult {
            u,
            n_steps,
            unitarity_defect,
        })
    }
}

/// Rotating-frame amplitudes `D±` and the accumulated phase `J(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatingFrameState {
    pub d_plus: C64,
    pub d_minus: C64,
    pub j: f64,
}

impl RotatingFrameState {
    /// `U'(0) = I`.
    pub fn initial() -> Self {
        RotatingFrameState {
            d_plus: C64::new(FRAC_1_SQRT_2, 0.0),
            d_minus: C64::new(FRAC_1_SQRT_2, 0.0),
            j: 0.0,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.d_plus.norm_sqr() + self.d_minus.norm_sqr()
    }

    /// First column `(u11, u21)` of the rotating-frame propagator `U'`.
    pub fn rotating_column(&self) -> (C64, C64) {
        let s_plus = C64::from_polar(SQRT_2, -self.j) * self.d_plus;
        let s_minus = C64::from_polar(SQRT_2, self.j) * self.d_minus;
        (0.5 * (s_plus + s_minus), 0.5 * (s_plus - s_minus))
    }
}

fn check_steps(n_steps: usize) -> Result<()> {
    if n_steps < MIN_STEPS {
        Err(OttoError::param(
            "n_steps",
            format!("need at least {MIN_STEPS} steps, got {n_steps}"),
        ))
    } else {
        Ok(())
    }
}

/// Midpoint-exponential product for an arbitrary generator on `[0, τ]`.
/// `observe(k, t, U)` sees the propagator after every step.
fn integrate_midpoint<H, O>(tau: f64, n_steps: usize, hamiltonian: H, mut observe: O) -> UnitaryOp
where
    H: Fn(f64) -> HermitianOp,
    O: FnMut(usize, f64, &UnitaryOp),
{
    let dt = tau / n_steps as f64;
    let mut u = UnitaryOp::IDENTITY;
    for k in 0..n_steps {
        let t_mid = (k as f64 + 0.5) * dt;
        u = expm_i_herm2(&hamiltonian(t_mid), dt) * u;
        observe(k + 1, (k + 1) as f64 * dt, &u);
    }
    u
}

/// Expansion-stroke propagator by midpoint exponentials in the lab frame.
pub fn propagator_lab(params: &EngineParams, n_steps: usize) -> Result<PropagatorResult> {
    check_steps(n_steps)?;
    let u = integrate_midpoint(
        params.tau(),
        n_steps,
        |t| params.h_exp_unchecked(t),
        |_, _, _| {},
    );
    PropagatorResult::accept(u, n_steps)
}

/// Compression-stroke propagator obtained by integrating `H_comp(t)` directly.
/// It coincides with the adjoint of [`propagator_lab`] at the same resolution.
pub fn propagator_compression_lab(
    params: &EngineParams,
    n_steps: usize,
) -> Result<PropagatorResult> {
    check_steps(n_steps)?;
    let tau = params.tau();
    let u = integrate_midpoint(
        tau,
        n_steps,
        |t| -params.h_exp_unchecked(tau - t),
        |_, _, _| {},
    );
    PropagatorResult::accept(u, n_steps)
}

/// Which unitary stroke a trajectory follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stroke {
    Expansion,
    Compression,
}

/// Propagator snapshots `(t, U(t, 0))` at `n_samples + 1` evenly spaced
/// times including both ends. `n_steps` must be a multiple of `n_samples`.
pub fn lab_trajectory(
    params: &EngineParams,
    stroke: Stroke,
    n_steps: usize,
    n_samples: usize,
) -> Result<Vec<(f64, UnitaryOp)>> {
    check_steps(n_steps)?;
    if n_samples == 0 || !n_steps.is_multiple_of(n_samples) {
        return Err(OttoError::param(
            "n_samples",
            format!("{n_samples} does not divide the step count {n_steps}"),
        ));
    }
    let stride = n_steps / n_samples;
    let tau = params.tau();
    let mut out = Vec::with_capacity(n_samples + 1);
    out.push((0.0, UnitaryOp::IDENTITY));
    let observe = |k: usize, t: f64, u: &UnitaryOp| {
        if k.is_multiple_of(stride) {
            out.push((if k == n_steps { tau } else { t }, *u));
        }
    };
    match stroke {
        Stroke::Expansion => {
            integrate_midpoint(tau, n_steps, |t| params.h_exp_unchecked(t), observe);
        }
        Stroke::Compression => {
            integrate_midpoint(tau, n_steps, |t| -params.h_exp_unchecked(tau - t), observe);
        }
    }
    Ok(out)
}

/// `J(t) = −π[ν_cold·t + (ν_hot − ν_cold)·t²/(2τ)]`, the integral of `−πν`.
pub fn rotating_phase(params: &EngineParams, t: f64) -> f64 {
    -PI * (params.nu_cold() * t
        + (params.nu_hot() - params.nu_cold()) * t * t / (2.0 * params.tau()))
}

/// Coupling `(ω̃ − ω)/2` of the rotating-frame equations (rad/s).
pub fn rotating_coupling(params: &EngineParams) -> f64 {
    0.5 * (params.omega_tilde() - params.omega())
}

/// RK4 integration of `Ḋ± = −i·Δ·e^{±2iJ(t)}·D∓`, returning the state after
/// every step (`n_steps + 1` entries with times).
pub fn rotating_frame_trajectory(
    params: &EngineParams,
    n_steps: usize,
) -> Result<Vec<(f64, RotatingFrameState)>> {
    check_steps(n_steps)?;
    let mut out = Vec::with_capacity(n_steps + 1);
    integrate_rotating(params, n_steps, |t, s| out.push((t, *s)));
    Ok(out)
}

fn integrate_rotating<O>(
    params: &EngineParams,
    n_steps: usize,
    mut observe: O,
) -> RotatingFrameState
where
    O: FnMut(f64, &RotatingFrameState),
{
    let tau = params.tau();
    let delta = rotating_coupling(params);
    let dt = tau / n_steps as f64;
    let rhs = |t: f64, dp: C64, dm: C64| -> (C64, C64) {
        let phase = C64::from_polar(1.0, 2.0 * rotating_phase(params, t));
        let k = C64::new(0.0, -delta);
        (k * phase * dm, k * phase.conj() * dp)
    };
    let mut state = RotatingFrameState::initial();
    observe(0.0, &state);
    let (mut dp, mut dm) = (state.d_plus, state.d_minus);
    for k in 0..n_steps {
        let t = k as f64 * dt;
        let h = C64::new(dt, 0.0);
        let half = C64::new(0.5 * dt, 0.0);
        let (k1p, k1m) = rhs(t, dp, dm);
        let (k2p, k2m) = rhs(t + 0.5 * dt, dp + half * k1p, dm + half * k1m);
        let (k3p, k3m) = rhs(t + 0.5 * dt, dp + half * k2p, dm + half * k2m);
        let (k4p, k4m) = rhs(t + dt, dp + h * k3p, dm + h * k3m);
        let sixth = C64::new(dt / 6.0, 0.0);
        dp += sixth * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        dm += sixth * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
        let t_next = if k + 1 == n_steps {
            tau
        } else {
            (k + 1) as f64 * dt
        };
        state = RotatingFrameState {
            d_plus: dp,
            d_minus: dm,
            j: rotating_phase(params, t_next),
        };
        observe(t_next, &state);
    }
    state
}

/// `e^{−i(ω/2)σz·t}` as an SU(2) element.
fn frame_rotation(omega: f64, t: f64) -> UnitaryOp {
    UnitaryOp::from_parts(
        0.0,
        C64::from_polar(1.0, -0.5 * omega * t),
        C64::new(0.0, 0.0),
    )
}

fn lab_from_rotating(params: &EngineParams, state: &RotatingFrameState) -> UnitaryOp {
    let (u11, u21) = state.rotating_column();
    frame_rotation(params.omega(), params.tau()) * UnitaryOp::from_parts(0.0, u11, u21)
}

/// Expansion-stroke propagator through the rotating-frame amplitudes.
pub fn propagator_rotating(params: &EngineParams, n_steps: usize) -> Result<PropagatorResult> {
    check_steps(n_steps)?;
    let state = integrate_rotating(params, n_steps, |_, _| {});
    if (state.norm_sqr() - 1.0).abs() > UNITARITY_TOL {
        return Err(OttoError::Integration(format!(
            "|D+|^2 + |D-|^2 drifted to {}",
            state.norm_sqr()
        )));
    }
    PropagatorResult::accept(lab_from_rotating(params, &state), n_steps)
}

/// Closed-form propagator for `ω̃ = ω`:
/// `U(τ) = e^{−i(ω/2)σz·τ}·e^{−iJ(τ)σx}` with `J(τ) = −πτ(ν_cold + ν_hot)/2`.
pub fn analytic_propagator_g1(params: &EngineParams) -> Result<UnitaryOp> {
    if params.g() != 1.0 {
        return Err(OttoError::Misuse("analytic_propagator_g1", params.g()));
    }
    let j = -PI * params.tau() * (params.nu_cold() + params.nu_hot()) / 2.0;
    let (sin, cos) = j.sin_cos();
    let rotating = UnitaryOp::from_parts(0.0, C64::new(cos, 0.0), C64::new(0.0, -sin));
    Ok(frame_rotation(params.omega(), params.tau()) * rotating)
}

/// Propagator at the smallest power-of-two multiple of `start_steps` whose
/// step-halving difference `max|U(N) − U(2N)|` is below `tol`.
pub fn converged_propagator(
    params: &EngineParams,
    start_steps: usize,
    tol: f64,
    max_steps: usize,
) -> Result<PropagatorResult> {
    let mut n = start_steps.max(MIN_STEPS);
    let mut coarse = propagator_lab(params, n)?;
    while n * 2 <= max_steps {
        n *= 2;
        let fine = propagator_lab(params, n)?;
        let diff = (fine.u.to_mat2() - coarse.u.to_mat2()).max_norm();
        if diff < tol {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(OttoError::Integration(format!(
        "step halving did not reach {tol:e} within {max_steps} steps"
    )))
}

/// `max|U(N) − U(N/2)|`, the step-halving Cauchy defect at resolution `n_steps`.
pub fn step_halving_defect(params: &EngineParams, n_steps: usize) -> Result<f64> {
    let fine = propagator_lab(params, n_steps)?;
    let coarse = propagator_lab(params, n_steps / 2)?;
    Ok((fine.u.to_mat2() - coarse.u.to_mat2()).max_norm())
}

/// `ξ = |⟨Ψhot+|U|Ψcold−⟩|²`, cross-checked against `|⟨Ψhot−|U|Ψcold+⟩|²`.
pub fn transition_probability(params: &EngineParams, u: &UnitaryOp) -> Result<f64> {
    let h_cold = params.h_cold();
    let h_hot = params.h_hot();
    let cold = eig_herm2(&h_cold).require_nondegenerate(&h_cold)?;
    let hot = eig_herm2(&h_hot).require_nondegenerate(&h_hot)?;
    transition_probability_between(&cold, &hot, u)
}

/// ξ between two given eigenbases.
pub fn transition_probability_between(
    cold: &EigenPair,
    hot: &EigenPair,
    u: &UnitaryOp,
) -> Result<f64> {
    let defect = u.unitarity_defect();
    if !(defect < UNITARITY_TOL) {
        return Err(OttoError::Invariant(format!(
            "propagator not unitary (defect {defect:e})"
        )));
    }
    let m = u.to_mat2();
    let up = m.sandwich(&hot.psi_plus, &cold.psi_minus).norm_sqr();
    let down = m.sandwich(&hot.psi_minus, &cold.psi_plus).norm_sqr();
    if (up - down).abs() > XI_SYMMETRY_TOL {
        return Err(OttoError::Invariant(format!(
            "transition matrix elements disagree: {up} vs {down}"
        )));
    }
    Ok(up.clamp(0.0, 1.0))
}
