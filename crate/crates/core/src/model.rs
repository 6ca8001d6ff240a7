//! Engine configuration and the stroke Hamiltonians.
//!
//! The public constructors take the laboratory units used for NMR
//! experiments (kHz, μs). Internally every frequency is in Hz, every time in
//! seconds and every energy in h·Hz.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{OttoError, Result};
use crate::mat2::HermitianOp;

/// Unit system: `h = 1`, `ħ = 1/(2π)`.
pub mod units {
    use std::f64::consts::PI;

    pub const PLANCK: f64 = 1.0;
    pub const HBAR: f64 = PLANCK / (2.0 * PI);
    /// Hz per kHz.
    pub const KHZ: f64 = 1e3;
    /// Seconds per μs.
    pub const MICROSECOND: f64 = 1e-6;
}

use units::{HBAR, KHZ, MICROSECOND, PLANCK};

/// Clean engine configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineParams {
    nu_cold: f64,
    nu_hot: f64,
    tau: f64,
    g: f64,
    p_plus_cold: f64,
    p_plus_hot: f64,
}

impl EngineParams {
    /// Frequencies in kHz, driving time in μs.
    pub fn new(
        nu_cold_khz: f64,
        nu_hot_khz: f64,
        tau_us: f64,
        g: f64,
        p_plus_cold: f64,
        p_plus_hot: f64,
    ) -> Result<Self> {
        Self::from_si(
            nu_cold_khz * KHZ,
            nu_hot_khz * KHZ,
            tau_us * MICROSECOND,
            g,
            p_plus_cold,
            p_plus_hot,
        )
    }

    /// Frequencies in Hz, driving time in seconds.
    pub fn from_si(
        nu_cold: f64,
        nu_hot: f64,
        tau: f64,
        g: f64,
        p_plus_cold: f64,
        p_plus_hot: f64,
    ) -> Result<Self> {
        let p = EngineParams {
            nu_cold,
            nu_hot,
            tau,
            g,
            p_plus_cold,
            p_plus_hot,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        positive("nu_cold", self.nu_cold)?;
        positive("nu_hot", self.nu_hot)?;
        positive("tau", self.tau)?;
        if !self.g.is_finite() {
            return Err(OttoError::param("g", "must be finite"));
        }
        open_unit("p_plus_cold", self.p_plus_cold)?;
        open_unit("p_plus_hot", self.p_plus_hot)?;
        Ok(())
    }

    /// The reference NMR engine: ν_cold = 2.0 kHz, ν_hot = 3.6 kHz,
    /// p⁺_cold = 0.261.
    pub fn nmr_reference(tau_us: f64, g: f64, p_plus_hot: f64) -> Result<Self> {
        Self::new(2.0, 3.6, tau_us, g, 0.261, p_plus_hot)
    }

    pub fn nu_cold(&self) -> f64 {
        self.nu_cold
    }

    pub fn nu_hot(&self) -> f64 {
        self.nu_hot
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn p_plus_cold(&self) -> f64 {
        self.p_plus_cold
    }

    pub fn p_plus_hot(&self) -> f64 {
        self.p_plus_hot
    }

    pub fn nu_cold_khz(&self) -> f64 {
        self.nu_cold / KHZ
    }

    pub fn nu_hot_khz(&self) -> f64 {
        self.nu_hot / KHZ
    }

    pub fn tau_us(&self) -> f64 {
        self.tau / MICROSECOND
    }

    /// Field rotation rate `ω = π/(2τ)` (rad/s).
    pub fn omega(&self) -> f64 {
        PI / (2.0 * self.tau)
    }

    /// z-field strength `ω̃ = g·ω` (rad/s).
    pub fn omega_tilde(&self) -> f64 {
        self.g * self.omega()
    }

    pub fn with_g(&self, g: f64) -> Result<Self> {
        Self::from_si(
            self.nu_cold,
            self.nu_hot,
            self.tau,
            g,
            self.p_plus_cold,
            self.p_plus_hot,
        )
    }

    pub fn with_tau_us(&self, tau_us: f64) -> Result<Self> {
        Self::from_si(
            self.nu_cold,
            self.nu_hot,
            tau_us * MICROSECOND,
            self.g,
            self.p_plus_cold,
            self.p_plus_hot,
        )
    }

    pub fn with_populations(&self, p_plus_cold: f64, p_plus_hot: f64) -> Result<Self> {
        Self::from_si(
            self.nu_cold,
            self.nu_hot,
            self.tau,
            self.g,
            p_plus_cold,
            p_plus_hot,
        )
    }

    /// Frequencies scaled by `(1 + δ_cold)` and `(1 + δ_hot)`.
    pub fn with_frequency_offsets(&self, delta_cold: f64, delta_hot: f64) -> Result<Self> {
        Self::from_si(
            self.nu_cold * (1.0 + delta_cold),
            self.nu_hot * (1.0 + delta_hot),
            self.tau,
            self.g,
            self.p_plus_cold,
            self.p_plus_hot,
        )
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if (0.0..=self.tau).contains(&t) {
            Ok(())
        } else {
            Err(OttoError::TimeOutOfRange { t, tau: self.tau })
        }
    }

    /// Linear frequency ramp, `t` in seconds.
    pub fn nu_of_t(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.nu_unchecked(t))
    }

    pub(crate) fn nu_unchecked(&self, t: f64) -> f64 {
        let s = t / self.tau;
        self.nu_cold * (1.0 - s) + self.nu_hot * s
    }

    fn z_coefficient(&self) -> f64 {
        HBAR * self.omega_tilde() / 2.0
    }

    /// Hamiltonian of the cold reservoir: `−½hν_cold σx + ħω̃/2 σz`.
    pub fn h_cold(&self) -> HermitianOp {
        HermitianOp::new(0.0, -0.5 * PLANCK * self.nu_cold, 0.0, self.z_coefficient())
    }

    /// Hamiltonian of the hot reservoir: `−½hν_hot σy + ħω̃/2 σz`.
    pub fn h_hot(&self) -> HermitianOp {
        HermitianOp::new(0.0, 0.0, -0.5 * PLANCK * self.nu_hot, self.z_coefficient())
    }

    /// Driven Hamiltonian of the expansion stroke.
    pub fn h_exp(&self, t: f64) -> Result<HermitianOp> {
        self.check_time(t)?;
        Ok(self.h_exp_unchecked(t))
    }

    pub(crate) fn h_exp_unchecked(&self, t: f64) -> HermitianOp {
        // The endpoints are returned verbatim so the boundary identities are exact.
        if t == 0.0 {
            return self.h_cold();
        }
        if t == self.tau {
            return self.h_hot();
        }
        let half_nu = 0.5 * PLANCK * self.nu_unchecked(t);
        let (sin, cos) = (FRAC_PI_2 * (t / self.tau)).sin_cos();
        HermitianOp::new(0.0, -half_nu * cos, -half_nu * sin, self.z_coefficient())
    }

    /// Compression Hamiltonian, `H_comp(t) = −H_exp(τ − t)`.
    pub fn h_comp(&self, t: f64) -> Result<HermitianOp> {
        self.check_time(t)?;
        Ok(-self.h_exp_unchecked(self.tau - t))
    }

    /// `E_cold`, half the cold level splitting (h·Hz).
    pub fn e_cold(&self) -> f64 {
        level_energy(self.nu_cold, self.omega_tilde())
    }

    /// `E_hot`, half the hot level splitting (h·Hz).
    pub fn e_hot(&self) -> f64 {
        level_energy(self.nu_hot, self.omega_tilde())
    }
}

/// `E = (h/4π)·√(4π²ν² + ω̃²)`.
pub fn level_energy(nu: f64, omega_tilde: f64) -> f64 {
    PLANCK / (4.0 * PI) * (4.0 * PI * PI * nu * nu + omega_tilde * omega_tilde).sqrt()
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(OttoError::param(
            name,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn open_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(OttoError::param(
            name,
            format!("must lie in (0, 1), got {v}"),
        ))
    }
}
