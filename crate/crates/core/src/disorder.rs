//! Quenched averaging of the efficiency over static frequency disorder.
//!
//! Each realization scales the reservoir frequencies to `ν_cold(1 + δ₁)` and
//! `ν_hot(1 + δ₂)` with independent `δ₁, δ₂`, reruns the expansion-stroke
//! propagator and the full cycle, and the efficiency is averaged over
//! realizations. Averages come either from Monte Carlo sampling or from a
//! tensor-product Gauss rule over `(δ₁, δ₂)`.

use std::fmt;
use std::str::FromStr;

use gauss_quad::{GaussHermite, GaussLegendre};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cycle::simulate;
use crate::error::{OttoError, Result};
use crate::model::EngineParams;

/// Draws with `1 + δ` at or below this floor are redrawn, keeping ν > 0.
pub const FREQUENCY_FLOOR: f64 = 1e-3;

/// Per-sample propagator resolution used for disorder averages.
pub const DEFAULT_DISORDER_STEPS: usize = 5_000;

const MAX_REDRAWS_PER_DELTA: usize = 1_000;

/// Largest tolerated number of floor-discarded draws per accepted draw.
pub const MAX_REJECTION_RATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderKind {
    /// Zero mean, standard deviation σ.
    Gaussian,
    /// Uniform on `[−σ/2, σ/2]`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingMethod {
    MonteCarlo,
    Quadrature,
}

impl FromStr for DisorderKind {
    type Err = OttoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(DisorderKind::Gaussian),
            "uniform" => Ok(DisorderKind::Uniform),
            other => Err(OttoError::param(
                "dist",
                format!("unknown distribution `{other}`"),
            )),
        }
    }
}

impl fmt::Display for DisorderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DisorderKind::Gaussian => "gaussian",
            DisorderKind::Uniform => "uniform",
        })
    }
}

impl FromStr for AveragingMethod {
    type Err = OttoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mc" | "monte_carlo" => Ok(AveragingMethod::MonteCarlo),
            "quad" | "quadrature" => Ok(AveragingMethod::Quadrature),
            other => Err(OttoError::param(
                "method",
                format!("unknown method `{other}`"),
            )),
        }
    }
}

impl fmt::Display for AveragingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AveragingMethod::MonteCarlo => "mc",
            AveragingMethod::Quadrature => "quad",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub kind: DisorderKind,
    pub sigma: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub method: AveragingMethod,
    pub quadrature_order: usize,
    /// Propagator steps per realization.
    pub n_steps: usize,
}

impl Default for DisorderSpec {
    fn default() -> Self {
        DisorderSpec {
            kind: DisorderKind::Gaussian,
            sigma: 0.05,
            n_samples: 10_000,
            seed: 0,
            method: AveragingMethod::MonteCarlo,
            quadrature_order: 16,
            n_steps: DEFAULT_DISORDER_STEPS,
        }
    }
}

impl DisorderSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(OttoError::param(
                "sigma",
                format!("must be finite and >= 0, got {}", self.sigma),
            ));
        }
        if self.n_samples == 0 {
            return Err(OttoError::param("n_samples", "need at least one sample"));
        }
        if self.method == AveragingMethod::Quadrature && self.quadrature_order < 2 {
            return Err(OttoError::param(
                "quadrature_order",
                "need at least 2 nodes",
            ));
        }
        Ok(())
    }
}

/// One realization of the frequency offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaDraw {
    pub delta_cold: f64,
    pub delta_hot: f64,
    /// Draws discarded by the frequency floor.
    pub redraws: usize,
}

/// Independent random stream of sample `index`; identical on every platform
/// and independent of scheduling.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_one<R: Rng + ?Sized>(spec: &DisorderSpec, rng: &mut R, redraws: &mut usize) -> Result<f64> {
    if spec.sigma == 0.0 {
        return Ok(0.0);
    }
    for _ in 0..MAX_REDRAWS_PER_DELTA {
        let delta = match spec.kind {
            DisorderKind::Gaussian => spec.sigma * rng.sample::<f64, _>(StandardNormal),
            DisorderKind::Uniform => spec.sigma * (rng.gen::<f64>() - 0.5),
        };
        if 1.0 + delta > FREQUENCY_FLOOR {
            return Ok(delta);
        }
        *redraws += 1;
    }
    Err(OttoError::Config(format!(
        "sigma = {} leaves almost no mass above the frequency floor",
        spec.sigma
    )))
}

/// Draws `(δ₁, δ₂)`.
pub fn sample_delta<R: Rng + ?Sized>(spec: &DisorderSpec, rng: &mut R) -> Result<DeltaDraw> {
    let mut redraws = 0;
    let delta_cold = draw_one(spec, rng, &mut redraws)?;
    let delta_hot = draw_one(spec, rng, &mut redraws)?;
    Ok(DeltaDraw {
        delta_cold,
        delta_hot,
        redraws,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchedResult {
    pub mean_eta: f64,
    /// Standard error of the Monte Carlo mean; zero for quadrature.
    pub std_error: f64,
    pub n_effective: usize,
    /// Realizations whose cycle failed (degenerate configuration).
    pub rejected: usize,
    /// Realizations attempted; `n_effective + rejected`.
    pub n_samples: usize,
    /// Draws discarded by the frequency floor.
    pub redraws: usize,
}

/// Weighted running mean and variance; exact when all inputs are equal.
#[derive(Default)]
struct Accumulator {
    weight: f64,
    mean: f64,
    m2: f64,
    count: usize,
}

impl Accumulator {
    fn push(&mut self, x: f64, w: f64) {
        self.count += 1;
        self.weight += w;
        let d = x - self.mean;
        self.mean += (w / self.weight) * d;
        self.m2 += w * d * (x - self.mean);
    }
}

fn cycle_eta(
    params: &EngineParams,
    delta_cold: f64,
    delta_hot: f64,
    n_steps: usize,
) -> Option<f64> {
    let perturbed = params.with_frequency_offsets(delta_cold, delta_hot).ok()?;
    simulate(&perturbed, n_steps)
        .ok()
        .map(|r| r.eta)
        .filter(|eta| eta.is_finite())
}

/// Quenched average `⟨η(σ)⟩`.
pub fn quenched_efficiency(params: &EngineParams, spec: &DisorderSpec) -> Result<QuenchedResult> {
    spec.validate()?;
    match spec.method {
        AveragingMethod::MonteCarlo => monte_carlo(params, spec),
        AveragingMethod::Quadrature => quadrature(params, spec),
    }
}

fn finish(
    acc: Accumulator,
    rejected: usize,
    redraws: usize,
    std_error: f64,
) -> Result<QuenchedResult> {
    if acc.count == 0 {
        return Err(OttoError::EfficiencyUndefined(
            "every disorder realization failed",
        ));
    }
    Ok(QuenchedResult {
        mean_eta: acc.mean,
        std_error,
        n_effective: acc.count,
        rejected,
        n_samples: acc.count + rejected,
        redraws,
    })
}

fn monte_carlo(params: &EngineParams, spec: &DisorderSpec) -> Result<QuenchedResult> {
    let outcomes: Vec<(DeltaDraw, Option<f64>)> = (0..spec.n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let draw = sample_delta(spec, &mut sample_rng(spec.seed, i))?;
            Ok((
                draw,
                cycle_eta(params, draw.delta_cold, draw.delta_hot, spec.n_steps),
            ))
        })
        .collect::<Result<_>>()?;

    let redraws: usize = outcomes.iter().map(|(d, _)| d.redraws).sum();
    let accepted = 2 * spec.n_samples;
    if spec.sigma > 0.0 && redraws as f64 > MAX_REJECTION_RATE * accepted as f64 {
        return Err(OttoError::Config(format!(
            "{redraws} draws fell below the frequency floor for {accepted} accepted; sigma = {} is too large",
            spec.sigma
        )));
    }
    let mut acc = Accumulator::default();
    let mut rejected = 0;
    for (_, eta) in &outcomes {
        match eta {
            Some(eta) => acc.push(*eta, 1.0),
            None => rejected += 1,
        }
    }
    let std_error = if acc.count > 1 {
        (acc.m2 / (acc.count - 1) as f64 / acc.count as f64).sqrt()
    } else {
        0.0
    };
    finish(acc, rejected, redraws, std_error)
}

/// Nodes and normalized weights of the one-dimensional rule for `kind`.
pub fn quadrature_rule(kind: DisorderKind, sigma: f64, order: usize) -> Result<Vec<(f64, f64)>> {
    let bad = |e: String| OttoError::param("quadrature_order", e);
    Ok(match kind {
        DisorderKind::Gaussian => {
            let rule = GaussHermite::new(order).map_err(|e| bad(e.to_string()))?;
            let norm = std::f64::consts::PI.sqrt();
            rule.as_node_weight_pairs()
                .iter()
                .map(|(x, w)| (std::f64::consts::SQRT_2 * sigma * x, w / norm))
                .collect()
        }
        DisorderKind::Uniform => {
            let rule = GaussLegendre::new(order).map_err(|e| bad(e.to_string()))?;
            rule.as_node_weight_pairs()
                .iter()
                .map(|(x, w)| (0.5 * sigma * x, 0.5 * w))
                .collect()
        }
    })
}

fn quadrature(params: &EngineParams, spec: &DisorderSpec) -> Result<QuenchedResult> {
    let rule = quadrature_rule(spec.kind, spec.sigma, spec.quadrature_order)?;
    let grid: Vec<(f64, f64, f64)> = rule
        .iter()
        .flat_map(|&(d1, w1)| rule.iter().map(move |&(d2, w2)| (d1, d2, w1 * w2)))
        .collect();
    let etas: Vec<Option<f64>> = grid
        .par_iter()
        .map(|&(d1, d2, _)| {
            if 1.0 + d1 <= FREQUENCY_FLOOR || 1.0 + d2 <= FREQUENCY_FLOOR {
                None
            } else {
                cycle_eta(params, d1, d2, spec.n_steps)
            }
        })
        .collect();
    let mut acc = Accumulator::default();
    let mut rejected = 0;
    for (&(_, _, w), eta) in grid.iter().zip(&etas) {
        match eta {
            Some(eta) => acc.push(*eta, w),
            None => rejected += 1,
        }
    }
    finish(acc, rejected, 0, 0.0)
}
