//! The four-stroke cycle and its thermodynamic ledger.
//!
//! [`run_cycle_trace`] builds the stroke states explicitly and evaluates work
//! and heats as traces. [`ClosedForm`] evaluates the same quantities from
//! `ξ`, the level energies and the reservoir populations alone. The two
//! routes agree to rounding for any unitary, which makes each an oracle for
//! the other.
//!
//! Sign conventions: `work` is the energy change of the working medium over
//! the two unitary strokes (negative when the engine delivers work),
//! `q_hot`/`q_cold` are the energy absorbed from the hot/cold reservoir.

use serde::{Deserialize, Serialize};

use crate::error::{OttoError, Result};
use crate::evolution::{propagator_lab, transition_probability};
use crate::mat2::{eig_herm2, expectation, DensityOp, UnitaryOp};
use crate::model::EngineParams;
use crate::thermal::{beta_from_population, gibbs_state, tanh_beta_energy, SpinTemperature};

/// Sign pattern of `(work, q_hot, q_cold)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperationMode {
    /// Work out, heat in from the hot reservoir.
    Engine,
    /// Work out, heat drawn from the cold reservoir instead.
    InvertedEngine,
    /// Work in, heat pumped from cold to hot.
    Refrigerator,
    /// Work in, heat dumped into both reservoirs.
    Heater,
    /// Work in, heat pushed from hot to cold.
    Accelerator,
    /// No net work.
    Idle,
}

impl OperationMode {
    pub fn classify(work: f64, q_hot: f64, q_cold: f64) -> Self {
        if work < 0.0 {
            if q_hot > 0.0 {
                OperationMode::Engine
            } else {
                OperationMode::InvertedEngine
            }
        } else if work > 0.0 {
            if q_cold > 0.0 {
                OperationMode::Refrigerator
            } else if q_hot > 0.0 {
                OperationMode::Accelerator
            } else {
                OperationMode::Heater
            }
        } else {
            OperationMode::Idle
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            OperationMode::Engine => "engine",
            OperationMode::InvertedEngine => "inverted_engine",
            OperationMode::Refrigerator => "refrigerator",
            OperationMode::Heater => "heater",
            OperationMode::Accelerator => "accelerator",
            OperationMode::Idle => "idle",
        }
    }
}

/// States at the end of each stroke.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrokeStates {
    /// Cold Gibbs state (end of stroke 1).
    pub thermal_cold: DensityOp,
    /// After the expansion unitary (stroke 2).
    pub expanded: DensityOp,
    /// Hot Gibbs state (end of stroke 3).
    pub thermal_hot: DensityOp,
    /// After the compression unitary (stroke 4).
    pub compressed: DensityOp,
}

/// Per-cycle thermodynamic ledger. Energies in h·Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleResult {
    pub xi: f64,
    pub work: f64,
    pub q_hot: f64,
    pub q_cold: f64,
    /// `−work/q_hot`, reported in every mode.
    pub eta: f64,
    /// `1 − E_cold/E_hot`
    pub eta_otto: f64,
    pub mode: OperationMode,
    pub states: StrokeStates,
    pub e_cold: f64,
    pub e_hot: f64,
    pub beta_cold: SpinTemperature,
    pub beta_hot: SpinTemperature,
}

impl CycleResult {
    /// `work + q_hot + q_cold`, zero up to rounding.
    pub fn first_law_residual(&self) -> f64 {
        self.work + self.q_hot + self.q_cold
    }
}

fn reject_infinite_temperature(params: &EngineParams) -> Result<()> {
    if params.p_plus_cold() == 0.5 {
        return Err(OttoError::DegenerateTemperature("p_plus_cold = 0.5"));
    }
    if params.p_plus_hot() == 0.5 {
        return Err(OttoError::DegenerateTemperature("p_plus_hot = 0.5"));
    }
    Ok(())
}

/// Runs the four strokes with `u` as the expansion propagator and `u†` as the
/// compression propagator, evaluating every energy as a trace.
pub fn run_cycle_trace(params: &EngineParams, u: &UnitaryOp) -> Result<CycleResult> {
    reject_infinite_temperature(params)?;
    let h_cold = params.h_cold();
    let h_hot = params.h_hot();
    let e_cold = eig_herm2(&h_cold)
        .require_nondegenerate(&h_cold)?
        .half_gap();
    let e_hot = eig_herm2(&h_hot).require_nondegenerate(&h_hot)?.half_gap();
    let beta_cold =
        beta_from_population(params.p_plus_cold(), params.nu_cold(), params.omega_tilde())?;
    let beta_hot =
        beta_from_population(params.p_plus_hot(), params.nu_hot(), params.omega_tilde())?;

    let thermal_cold = gibbs_state(&h_cold, beta_cold)?;
    let expanded = thermal_cold.evolve(u)?;
    let thermal_hot = gibbs_state(&h_hot, beta_hot)?;
    let compressed = thermal_hot.evolve(&u.dagger())?;

    let e_in = expectation(&thermal_cold, &h_cold)?;
    let e_exp = expectation(&expanded, &h_hot)?;
    let e_th = expectation(&thermal_hot, &h_hot)?;
    let e_comp = expectation(&compressed, &h_cold)?;

    let work = e_exp - e_in + e_comp - e_th;
    let q_hot = e_th - e_exp;
    let q_cold = e_in - e_comp;
    if q_hot.abs() <= 1e-14 * e_hot {
        return Err(OttoError::EfficiencyUndefined(
            "no heat exchanged with the hot reservoir",
        ));
    }
    let xi = transition_probability(params, u)?;
    Ok(CycleResult {
        xi,
        work,
        q_hot,
        q_cold,
        eta: -work / q_hot,
        eta_otto: 1.0 - e_cold / e_hot,
        mode: OperationMode::classify(work, q_hot, q_cold),
        states: StrokeStates {
            thermal_cold,
            expanded,
            thermal_hot,
            compressed,
        },
        e_cold,
        e_hot,
        beta_cold,
        beta_hot,
    })
}

/// Propagates the expansion stroke at `n_steps` and runs the trace route.
pub fn simulate(params: &EngineParams, n_steps: usize) -> Result<CycleResult> {
    let prop = propagator_lab(params, n_steps)?;
    run_cycle_trace(params, &prop.u)
}

/// Closed-form coefficients of the cycle, built from `E_cold`, `E_hot` and
/// the signed factors `tanh(βE) = 1 − 2p⁺`.
///
/// `tanh_hot_abs` is `−tanh(β_hot·E_hot)`, which equals `tanh(|β_hot|·E_hot)`
/// whenever the hot reservoir is at negative temperature; the formulas stay
/// valid for either sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForm {
    pub e_cold: f64,
    pub e_hot: f64,
    pub tanh_cold: f64,
    pub tanh_hot_abs: f64,
}

impl ClosedForm {
    pub fn new(params: &EngineParams) -> Self {
        ClosedForm {
            e_cold: params.e_cold(),
            e_hot: params.e_hot(),
            tanh_cold: tanh_beta_energy(params.p_plus_cold()),
            tanh_hot_abs: -tanh_beta_energy(params.p_plus_hot()),
        }
    }

    fn sum(&self) -> f64 {
        self.tanh_cold + self.tanh_hot_abs
    }

    /// `Ξ₁ = (E_cold − E_hot)[tanh(β_c E_c) + tanh(|β_h| E_h)]`
    pub fn xi1(&self) -> f64 {
        (self.e_cold - self.e_hot) * self.sum()
    }

    /// `Ξ₂ = 2[E_hot tanh(β_c E_c) − E_cold tanh(|β_h| E_h)]`
    pub fn xi2(&self) -> f64 {
        2.0 * (self.e_hot * self.tanh_cold - self.e_cold * self.tanh_hot_abs)
    }

    pub fn pi1(&self) -> f64 {
        self.e_hot * self.sum()
    }

    pub fn pi2(&self) -> f64 {
        2.0 * self.e_hot * self.tanh_cold
    }

    pub fn pi3(&self) -> f64 {
        -self.e_cold * self.sum()
    }

    pub fn pi4(&self) -> f64 {
        2.0 * self.e_cold * self.tanh_hot_abs
    }

    pub fn work(&self, xi: f64) -> f64 {
        self.xi1() + xi * self.xi2()
    }

    pub fn heat_hot(&self, xi: f64) -> f64 {
        self.pi1() - xi * self.pi2()
    }

    pub fn heat_cold(&self, xi: f64) -> f64 {
        self.pi3() + xi * self.pi4()
    }

    /// `F = tanh(|β_h|E_h) / [tanh(β_c E_c) + tanh(|β_h|E_h)]`
    pub fn f(&self) -> f64 {
        self.tanh_hot_abs / self.sum()
    }

    /// `G = tanh(β_c E_c) / [tanh(β_c E_c) + tanh(|β_h|E_h)]`
    pub fn g(&self) -> f64 {
        self.tanh_cold / self.sum()
    }

    pub fn eta_otto(&self) -> f64 {
        1.0 - self.e_cold / self.e_hot
    }

    /// `η = 1 − (E_cold/E_hot)(1 − 2ξF)/(1 − 2ξG)`
    pub fn efficiency(&self, xi: f64) -> Result<f64> {
        if self.sum() == 0.0 {
            return Err(OttoError::EfficiencyUndefined(
                "tanh(beta_c E_c) + tanh(|beta_h| E_h) vanishes",
            ));
        }
        let denom = 1.0 - 2.0 * xi * self.g();
        if denom.abs() < 1e-14 {
            return Err(OttoError::EfficiencyUndefined("1 - 2 xi G vanishes"));
        }
        Ok(1.0 - self.e_cold / self.e_hot * (1.0 - 2.0 * xi * self.f()) / denom)
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if (0.0..=1.0).contains(&xi) {
        Ok(())
    } else {
        Err(OttoError::param(
            "xi",
            format!("must lie in [0, 1], got {xi}"),
        ))
    }
}

/// `⟨W⟩ = Ξ₁ + ξΞ₂`
pub fn work_closed_form(params: &EngineParams, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok(ClosedForm::new(params).work(xi))
}

/// `⟨Q_hot⟩ = Π₁ − ξΠ₂`
pub fn heat_hot_closed_form(params: &EngineParams, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok(ClosedForm::new(params).heat_hot(xi))
}

/// `⟨Q_cold⟩ = Π₃ + ξΠ₄`
pub fn heat_cold_closed_form(params: &EngineParams, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok(ClosedForm::new(params).heat_cold(xi))
}

pub fn efficiency_closed_form(params: &EngineParams, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    reject_infinite_temperature(params)?;
    ClosedForm::new(params).efficiency(xi)
}

/// Whether the reservoirs satisfy `|β_hot|E_hot ≥ β_cold E_cold`, the
/// condition for beating the adiabatic Otto efficiency at finite ξ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OttoThreshold {
    pub holds: bool,
    /// `tanh(|β_h|E_h) − tanh(β_c E_c) = (2p⁺_hot − 1) − (1 − 2p⁺_cold)`
    pub tanh_margin: f64,
    /// `|β_h|E_h − β_c E_c`
    pub energy_margin: f64,
}

pub fn otto_threshold(params: &EngineParams) -> Result<OttoThreshold> {
    if !(params.p_plus_cold() < 0.5) {
        return Err(OttoError::param(
            "p_plus_cold",
            "threshold requires a positive cold temperature (p < 0.5)",
        ));
    }
    if !(params.p_plus_hot() > 0.5) {
        return Err(OttoError::param(
            "p_plus_hot",
            "threshold requires a negative hot temperature (p > 0.5)",
        ));
    }
    let beta_cold =
        beta_from_population(params.p_plus_cold(), params.nu_cold(), params.omega_tilde())?;
    let beta_hot =
        beta_from_population(params.p_plus_hot(), params.nu_hot(), params.omega_tilde())?;
    let tanh_margin =
        -tanh_beta_energy(params.p_plus_hot()) - tanh_beta_energy(params.p_plus_cold());
    Ok(OttoThreshold {
        holds: tanh_margin >= 0.0,
        tanh_margin,
        energy_margin: beta_hot.0.abs() * params.e_hot() - beta_cold.0 * params.e_cold(),
    })
}
