//! Parameter sweeps, record emission and configuration files.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherence::stroke_coherence;
use crate::cycle::simulate;
use crate::disorder::{quenched_efficiency, AveragingMethod, DisorderKind, DisorderSpec};
use crate::error::{OttoError, Result};
use crate::evolution::{step_halving_defect, DEFAULT_STEPS};
use crate::model::EngineParams;

/// Step-halving tolerance enforced in strict mode.
pub const STRICT_TOL: f64 = 1e-9;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Tau,
    PPlusHot,
    G,
    Sigma,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Tau => "tau",
            SweepAxis::PPlusHot => "p_plus_hot",
            SweepAxis::G => "g",
            SweepAxis::Sigma => "sigma",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = OttoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tau" => Ok(SweepAxis::Tau),
            "p_plus_hot" | "p_hot" => Ok(SweepAxis::PPlusHot),
            "g" => Ok(SweepAxis::G),
            "sigma" => Ok(SweepAxis::Sigma),
            other => Err(OttoError::param("axis", format!("unknown axis `{other}`"))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    Xi,
    Eta,
    DeltaEtaVsG0,
    Coherence,
    QuenchedEta,
}

impl FromStr for Output {
    type Err = OttoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xi" => Ok(Output::Xi),
            "eta" => Ok(Output::Eta),
            "delta_eta_vs_g0" | "delta_eta" => Ok(Output::DeltaEtaVsG0),
            "coherence" => Ok(Output::Coherence),
            "quenched_eta" => Ok(Output::QuenchedEta),
            other => Err(OttoError::param(
                "outputs",
                format!("unknown output `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: EngineParams,
    pub axis: SweepAxis,
    /// Axis values in the public units: μs for τ, dimensionless otherwise.
    pub grid: Vec<f64>,
    /// Field ratios evaluated at every grid point; empty means `base.g()`.
    /// Must be empty when the axis is `g`.
    pub g_series: Vec<f64>,
    pub outputs: BTreeSet<Output>,
    pub disorder: Option<DisorderSpec>,
    /// Propagator steps per clean evaluation.
    pub resolution: usize,
    /// When set, Δη is also reported against the g = 0 engine at this τ (μs).
    pub reference_tau_us: Option<f64>,
    /// Reject points whose step-halving defect exceeds [`STRICT_TOL`].
    pub strict: bool,
}

impl SweepSpec {
    pub fn new(base: EngineParams, axis: SweepAxis, grid: Vec<f64>) -> Self {
        SweepSpec {
            base,
            axis,
            grid,
            g_series: Vec::new(),
            outputs: [Output::Xi, Output::Eta].into_iter().collect(),
            disorder: None,
            resolution: DEFAULT_STEPS,
            reference_tau_us: None,
            strict: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(OttoError::param("grid", "grid is empty"));
        }
        if self.grid.iter().any(|x| !x.is_finite()) {
            return Err(OttoError::param("grid", "grid values must be finite"));
        }
        if self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(OttoError::param("grid", "grid must be strictly increasing"));
        }
        if self.axis == SweepAxis::G && !self.g_series.is_empty() {
            return Err(OttoError::param("g_series", "cannot combine with a g axis"));
        }
        if self.outputs.is_empty() {
            return Err(OttoError::param("outputs", "no outputs requested"));
        }
        let needs_disorder =
            self.axis == SweepAxis::Sigma || self.outputs.contains(&Output::QuenchedEta);
        match &self.disorder {
            Some(d) => d.validate()?,
            None if needs_disorder => {
                return Err(OttoError::param(
                    "disorder",
                    "sigma axis or quenched_eta needs a disorder spec",
                ))
            }
            None => {}
        }
        Ok(())
    }
}

/// One sweep row: echoed inputs, requested outputs and provenance. Energies
/// are in h·kHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub index: usize,
    pub axis: SweepAxis,
    pub axis_value: f64,
    pub nu_cold_khz: f64,
    pub nu_hot_khz: f64,
    pub tau_us: f64,
    pub g: f64,
    pub p_plus_cold: f64,
    pub p_plus_hot: f64,
    pub sigma: Option<f64>,
    pub xi: Option<f64>,
    pub work: Option<f64>,
    pub q_hot: Option<f64>,
    pub q_cold: Option<f64>,
    pub eta: Option<f64>,
    pub eta_otto: Option<f64>,
    pub mode: Option<String>,
    pub eta_g0: Option<f64>,
    /// `η(g) − η(0)` at identical τ and populations.
    pub delta_eta_vs_g0: Option<f64>,
    /// `η(g, τ) − η(0, τ_ref)`.
    pub delta_eta_mixed_tau: Option<f64>,
    pub c_exp: Option<f64>,
    pub c_comp: Option<f64>,
    pub quenched_eta: Option<f64>,
    pub quenched_std_error: Option<f64>,
    pub quenched_n_effective: Option<usize>,
    pub quenched_rejected: Option<usize>,
    pub error: Option<String>,
    pub version: String,
    pub seed: Option<u64>,
    pub n_steps: usize,
}

impl RunRecord {
    fn echo(spec: &SweepSpec, index: usize, axis_value: f64, g: f64) -> Self {
        let b = &spec.base;
        let mut r = RunRecord {
            index,
            axis: spec.axis,
            axis_value,
            nu_cold_khz: b.nu_cold_khz(),
            nu_hot_khz: b.nu_hot_khz(),
            tau_us: b.tau_us(),
            g,
            p_plus_cold: b.p_plus_cold(),
            p_plus_hot: b.p_plus_hot(),
            sigma: spec.disorder.map(|d| d.sigma),
            xi: None,
            work: None,
            q_hot: None,
            q_cold: None,
            eta: None,
            eta_otto: None,
            mode: None,
            eta_g0: None,
            delta_eta_vs_g0: None,
            delta_eta_mixed_tau: None,
            c_exp: None,
            c_comp: None,
            quenched_eta: None,
            quenched_std_error: None,
            quenched_n_effective: None,
            quenched_rejected: None,
            error: None,
            version: VERSION.to_string(),
            seed: spec.disorder.map(|d| d.seed),
            n_steps: spec.resolution,
        };
        match spec.axis {
            SweepAxis::Tau => r.tau_us = axis_value,
            SweepAxis::PPlusHot => r.p_plus_hot = axis_value,
            SweepAxis::G => r.g = axis_value,
            SweepAxis::Sigma => r.sigma = Some(axis_value),
        }
        r
    }
}

/// Expands the grid into `(axis value, g)` points in output order.
fn points(spec: &SweepSpec) -> Vec<(f64, f64)> {
    let gs = if spec.g_series.is_empty() || spec.axis == SweepAxis::G {
        vec![spec.base.g()]
    } else {
        spec.g_series.clone()
    };
    gs.iter()
        .flat_map(|&g| spec.grid.iter().map(move |&x| (x, g)))
        .collect()
}

fn substitute(spec: &SweepSpec, x: f64, g: f64) -> Result<(EngineParams, Option<DisorderSpec>)> {
    let mut params = spec.base.with_g(g)?;
    let mut disorder = spec.disorder;
    match spec.axis {
        SweepAxis::Tau => params = params.with_tau_us(x)?,
        SweepAxis::PPlusHot => params = params.with_populations(params.p_plus_cold(), x)?,
        SweepAxis::G => params = params.with_g(x)?,
        SweepAxis::Sigma => {
            if let Some(d) = disorder.as_mut() {
                d.sigma = x;
            }
        }
    }
    Ok((params, disorder))
}

fn evaluate(spec: &SweepSpec, record: &mut RunRecord, x: f64, g: f64) -> Result<()> {
    let (params, disorder) = substitute(spec, x, g)?;
    let n = spec.resolution;
    if spec.strict {
        let defect = step_halving_defect(&params, n)?;
        if !(defect < STRICT_TOL) {
            return Err(OttoError::Integration(format!(
                "step-halving defect {defect:e} at {n} steps exceeds {STRICT_TOL:e}"
            )));
        }
    }
    let out = &spec.outputs;
    let wants_cycle = out.contains(&Output::Xi)
        || out.contains(&Output::Eta)
        || out.contains(&Output::DeltaEtaVsG0);
    if wants_cycle {
        let c = simulate(&params, n)?;
        record.xi = Some(c.xi);
        if out.contains(&Output::Eta) || out.contains(&Output::DeltaEtaVsG0) {
            let to_hkhz = 1.0 / crate::model::units::KHZ;
            record.work = Some(c.work * to_hkhz);
            record.q_hot = Some(c.q_hot * to_hkhz);
            record.q_cold = Some(c.q_cold * to_hkhz);
            record.eta = Some(c.eta);
            record.eta_otto = Some(c.eta_otto);
            record.mode = Some(c.mode.as_str().to_string());
        }
        if out.contains(&Output::DeltaEtaVsG0) {
            let eta_g0 = if params.g() == 0.0 {
                c.eta
            } else {
                simulate(&params.with_g(0.0)?, n)?.eta
            };
            record.eta_g0 = Some(eta_g0);
            record.delta_eta_vs_g0 = Some(c.eta - eta_g0);
            if let Some(tau_ref) = spec.reference_tau_us {
                let reference = params.with_g(0.0)?.with_tau_us(tau_ref)?;
                record.delta_eta_mixed_tau = Some(c.eta - simulate(&reference, n)?.eta);
            }
        }
    }
    if out.contains(&Output::Coherence) {
        let report = stroke_coherence(&params, n)?;
        record.c_exp = Some(report.c_exp);
        record.c_comp = Some(report.c_comp);
    }
    if out.contains(&Output::QuenchedEta) {
        let d = disorder.ok_or_else(|| OttoError::param("disorder", "missing disorder spec"))?;
        let q = quenched_efficiency(&params, &d)?;
        record.quenched_eta = Some(q.mean_eta);
        record.quenched_std_error = Some(q.std_error);
        record.quenched_n_effective = Some(q.n_effective);
        record.quenched_rejected = Some(q.rejected);
    }
    Ok(())
}

/// Evaluates every grid point (times every entry of `g_series`). Failing
/// points become rows with an error tag; rows are ordered by the g series,
/// then by grid index.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let records = points(spec)
        .into_par_iter()
        .enumerate()
        .map(|(i, (x, g))| {
            let mut record = RunRecord::echo(spec, i, x, g);
            if let Err(e) = evaluate(spec, &mut record, x, g) {
                let mut blank = RunRecord::echo(spec, i, x, g);
                blank.error = Some(format!("{}: {e}", e.tag()));
                record = blank;
            }
            record
        })
        .collect();
    Ok(records)
}

/// CSV column names, with units where they apply.
pub const CSV_HEADER: [&str; 30] = [
    "index",
    "axis",
    "axis_value",
    "nu_cold [kHz]",
    "nu_hot [kHz]",
    "tau [us]",
    "g",
    "p_plus_cold",
    "p_plus_hot",
    "sigma",
    "xi",
    "work [h*kHz]",
    "q_hot [h*kHz]",
    "q_cold [h*kHz]",
    "eta",
    "eta_otto",
    "mode",
    "eta_g0",
    "delta_eta_vs_g0",
    "delta_eta_mixed_tau",
    "c_exp",
    "c_comp",
    "quenched_eta",
    "quenched_std_error",
    "quenched_n_effective",
    "quenched_rejected",
    "error",
    "version",
    "seed",
    "n_steps",
];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn csv_row(r: &RunRecord) -> Vec<String> {
    vec![
        r.index.to_string(),
        r.axis.to_string(),
        num(r.axis_value),
        num(r.nu_cold_khz),
        num(r.nu_hot_khz),
        num(r.tau_us),
        num(r.g),
        num(r.p_plus_cold),
        num(r.p_plus_hot),
        opt_num(r.sigma),
        opt_num(r.xi),
        opt_num(r.work),
        opt_num(r.q_hot),
        opt_num(r.q_cold),
        opt_num(r.eta),
        opt_num(r.eta_otto),
        opt(&r.mode),
        opt_num(r.eta_g0),
        opt_num(r.delta_eta_vs_g0),
        opt_num(r.delta_eta_mixed_tau),
        opt_num(r.c_exp),
        opt_num(r.c_comp),
        opt_num(r.quenched_eta),
        opt_num(r.quenched_std_error),
        opt(&r.quenched_n_effective),
        opt(&r.quenched_rejected),
        opt(&r.error),
        r.version.clone(),
        opt(&r.seed),
        r.n_steps.to_string(),
    ]
}

fn csv_error(path: &Path, e: csv::Error) -> OttoError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => OttoError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => OttoError::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Writes records as CSV; numbers carry 17 significant digits.
pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(csv_row(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|source| OttoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(records, file).map_err(|e| csv_error(path, e))
}

pub fn emit_json(records: &[RunRecord], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(records).map_err(|e| OttoError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, text + "\n").map_err(|source| OttoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_field<T: FromStr>(field: &str, column: &str, path: &Path) -> Result<Option<T>> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| OttoError::Format {
        path: path.to_path_buf(),
        message: format!("bad value `{field}` in column `{column}`"),
    })
}

/// Reads a file written by [`emit_csv`].
pub fn parse_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(OttoError::Format {
            path: path.to_path_buf(),
            message: "unexpected header".into(),
        });
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let f = |i: usize| row.get(i).unwrap_or("");
        macro_rules! opt_col {
            ($i:expr) => {
                parse_field(f($i), CSV_HEADER[$i], path)?
            };
        }
        macro_rules! req_col {
            ($i:expr) => {
                parse_field(f($i), CSV_HEADER[$i], path)?.ok_or_else(|| OttoError::Format {
                    path: path.to_path_buf(),
                    message: format!("missing value in column `{}`", CSV_HEADER[$i]),
                })?
            };
        }
        records.push(RunRecord {
            index: req_col!(0),
            axis: req_col!(1),
            axis_value: req_col!(2),
            nu_cold_khz: req_col!(3),
            nu_hot_khz: req_col!(4),
            tau_us: req_col!(5),
            g: req_col!(6),
            p_plus_cold: req_col!(7),
            p_plus_hot: req_col!(8),
            sigma: opt_col!(9),
            xi: opt_col!(10),
            work: opt_col!(11),
            q_hot: opt_col!(12),
            q_cold: opt_col!(13),
            eta: opt_col!(14),
            eta_otto: opt_col!(15),
            mode: opt_col!(16),
            eta_g0: opt_col!(17),
            delta_eta_vs_g0: opt_col!(18),
            delta_eta_mixed_tau: opt_col!(19),
            c_exp: opt_col!(20),
            c_comp: opt_col!(21),
            quenched_eta: opt_col!(22),
            quenched_std_error: opt_col!(23),
            quenched_n_effective: opt_col!(24),
            quenched_rejected: opt_col!(25),
            error: opt_col!(26),
            version: req_col!(27),
            seed: opt_col!(28),
            n_steps: req_col!(29),
        });
    }
    Ok(records)
}

pub fn parse_json(path: &Path) -> Result<Vec<RunRecord>> {
    let text = fs::read_to_string(path).map_err(|source| OttoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| OttoError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Parses `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| OttoError::param("grid", format!("`{text}`: {why}"));
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:stop:count"));
        }
        let (a, b) = (number(parts[0])?, number(parts[1])?);
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| bad("count must be an integer"))?;
        if n == 0 {
            return Err(bad("count must be positive"));
        }
        return Ok(linspace(a, b, n));
    }
    text.split(',').map(number).collect()
}

/// `[engine]` section; frequencies in kHz, τ in μs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    pub nu_cold: Option<f64>,
    pub nu_hot: Option<f64>,
    pub tau: Option<f64>,
    pub g: Option<f64>,
    pub p_cold: Option<f64>,
    pub p_hot: Option<f64>,
    pub steps: Option<usize>,
    pub strict: Option<bool>,
}

impl EngineSection {
    /// Field-wise overlay: values present in `over` win.
    pub fn overlay(&self, over: &EngineSection) -> EngineSection {
        EngineSection {
            nu_cold: over.nu_cold.or(self.nu_cold),
            nu_hot: over.nu_hot.or(self.nu_hot),
            tau: over.tau.or(self.tau),
            g: over.g.or(self.g),
            p_cold: over.p_cold.or(self.p_cold),
            p_hot: over.p_hot.or(self.p_hot),
            steps: over.steps.or(self.steps),
            strict: over.strict.or(self.strict),
        }
    }

    /// Engine parameters, with missing values taken from the reference
    /// NMR engine (2 kHz, 3.6 kHz, 100 μs, g = 0, p⁺ = 0.261 and 0.99).
    pub fn params(&self) -> Result<EngineParams> {
        EngineParams::new(
            self.nu_cold.unwrap_or(2.0),
            self.nu_hot.unwrap_or(3.6),
            self.tau.unwrap_or(100.0),
            self.g.unwrap_or(0.0),
            self.p_cold.unwrap_or(0.261),
            self.p_hot.unwrap_or(0.99),
        )
    }
}

/// `[disorder]` section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSection {
    pub dist: Option<String>,
    pub sigma: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub method: Option<String>,
    pub order: Option<usize>,
    pub steps: Option<usize>,
}

impl DisorderSection {
    pub fn overlay(&self, over: &DisorderSection) -> DisorderSection {
        DisorderSection {
            dist: over.dist.clone().or_else(|| self.dist.clone()),
            sigma: over.sigma.or(self.sigma),
            samples: over.samples.or(self.samples),
            seed: over.seed.or(self.seed),
            method: over.method.clone().or_else(|| self.method.clone()),
            order: over.order.or(self.order),
            steps: over.steps.or(self.steps),
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == DisorderSection::default()
    }

    pub fn spec(&self) -> Result<DisorderSpec> {
        let d = DisorderSpec::default();
        let spec = DisorderSpec {
            kind: match &self.dist {
                Some(s) => s.parse::<DisorderKind>()?,
                None => d.kind,
            },
            sigma: self.sigma.unwrap_or(d.sigma),
            n_samples: self.samples.unwrap_or(d.n_samples),
            seed: self.seed.unwrap_or(d.seed),
            method: match &self.method {
                Some(s) => s.parse::<AveragingMethod>()?,
                None => d.method,
            },
            quadrature_order: self.order.unwrap_or(d.quadrature_order),
            n_steps: self.steps.unwrap_or(d.n_steps),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// `[sweep.NAME]` section. Its own `engine` and `disorder` tables override
/// the top-level ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Option<String>,
    pub grid: Option<GridValue>,
    pub g_series: Option<Vec<f64>>,
    pub outputs: Option<Vec<String>>,
    pub reference_tau: Option<f64>,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub disorder: DisorderSection,
}

/// A grid given either as an explicit list or as `"start:stop:count"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    List(Vec<f64>),
    Text(String),
}

impl GridValue {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            GridValue::List(v) => Ok(v.clone()),
            GridValue::Text(s) => parse_grid(s),
        }
    }
}

/// A whole configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub disorder: DisorderSection,
    #[serde(default)]
    pub sweep: BTreeMap<String, SweepSection>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| OttoError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| OttoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| OttoError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Sweep section `name`, or the only section when `name` is `None`.
    pub fn sweep_section(&self, name: Option<&str>) -> Result<(&str, &SweepSection)> {
        match name {
            Some(n) => self
                .sweep
                .get_key_value(n)
                .map(|(k, v)| (k.as_str(), v))
                .ok_or_else(|| OttoError::Config(format!("no [sweep.{n}] section"))),
            None if self.sweep.len() == 1 => {
                let (k, v) = self.sweep.iter().next().expect("one entry");
                Ok((k.as_str(), v))
            }
            None if self.sweep.is_empty() => Err(OttoError::Config("no [sweep.*] section".into())),
            None => Err(OttoError::Config(format!(
                "several sweeps defined ({}); pick one by name",
                self.sweep.keys().cloned().collect::<Vec<_>>().join(", ")
            ))),
        }
    }
}

impl SweepSection {
    pub fn overlay(&self, over: &SweepSection) -> SweepSection {
        SweepSection {
            axis: over.axis.clone().or_else(|| self.axis.clone()),
            grid: over.grid.clone().or_else(|| self.grid.clone()),
            g_series: over.g_series.clone().or_else(|| self.g_series.clone()),
            outputs: over.outputs.clone().or_else(|| self.outputs.clone()),
            reference_tau: over.reference_tau.or(self.reference_tau),
            engine: self.engine.overlay(&over.engine),
            disorder: self.disorder.overlay(&over.disorder),
        }
    }

    /// Builds a spec; `engine` and `disorder` are the file-level sections,
    /// which this section's own tables override.
    pub fn to_spec(&self, engine: &EngineSection, disorder: &DisorderSection) -> Result<SweepSpec> {
        let engine = engine.overlay(&self.engine);
        let disorder = disorder.overlay(&self.disorder);
        let axis: SweepAxis = self
            .axis
            .as_deref()
            .ok_or_else(|| OttoError::Config("sweep needs an axis".into()))?
            .parse()?;
        let grid = self
            .grid
            .as_ref()
            .ok_or_else(|| OttoError::Config("sweep needs a grid".into()))?
            .values()?;
        let mut spec = SweepSpec::new(engine.params()?, axis, grid);
        spec.g_series = self.g_series.clone().unwrap_or_default();
        if let Some(outputs) = &self.outputs {
            spec.outputs = outputs.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        let needs_disorder =
            axis == SweepAxis::Sigma || spec.outputs.contains(&Output::QuenchedEta);
        if needs_disorder || !disorder.is_empty() {
            spec.disorder = Some(disorder.spec()?);
        }
        spec.resolution = engine.steps.unwrap_or(DEFAULT_STEPS);
        spec.strict = engine.strict.unwrap_or(false);
        spec.reference_tau_us = self.reference_tau;
        spec.validate()?;
        Ok(spec)
    }
}

/// Largest deviations found by [`oracle_grid`]. Energies in h·kHz.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n_points: usize,
    /// `|η_closed(ξ) − η_trace|`.
    pub max_eta_deviation: f64,
    /// `|W + Q_hot + Q_cold|`.
    pub max_first_law: f64,
    /// `max|U_lab − U_rotating|`.
    pub max_route_deviation: f64,
    /// `max|U − U_analytic|` over the g = 1 points. The lab route is taken
    /// at the step-halving-converged resolution, the rotating route at the
    /// grid resolution.
    pub max_g1_lab: f64,
    pub max_g1_rotating: f64,
    pub n_g1_points: usize,
    /// Largest lab-route resolution used for the g = 1 comparison.
    pub max_g1_lab_steps: usize,
}

impl OracleReport {
    fn merge(self, o: OracleReport) -> OracleReport {
        OracleReport {
            n_points: self.n_points + o.n_points,
            max_eta_deviation: self.max_eta_deviation.max(o.max_eta_deviation),
            max_first_law: self.max_first_law.max(o.max_first_law),
            max_route_deviation: self.max_route_deviation.max(o.max_route_deviation),
            max_g1_lab: self.max_g1_lab.max(o.max_g1_lab),
            max_g1_rotating: self.max_g1_rotating.max(o.max_g1_rotating),
            n_g1_points: self.n_g1_points + o.n_g1_points,
            max_g1_lab_steps: self.max_g1_lab_steps.max(o.max_g1_lab_steps),
        }
    }
}

const G1_CAUCHY_TOL: f64 = 1e-11;
const G1_MAX_STEPS: usize = 1 << 22;

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn oracle_point(params: &EngineParams, n_steps: usize) -> Result<OracleReport> {
    let lab = crate::evolution::propagator_lab(params, n_steps)?.u;
    let rot = crate::evolution::propagator_rotating(params, n_steps)?.u;
    let cycle = crate::cycle::run_cycle_trace(params, &lab)?;
    let closed = crate::cycle::efficiency_closed_form(params, cycle.xi)?;
    let mut report = OracleReport {
        n_points: 1,
        max_eta_deviation: (closed - cycle.eta).abs(),
        max_first_law: cycle.first_law_residual().abs() / crate::model::units::KHZ,
        max_route_deviation: (lab.to_mat2() - rot.to_mat2()).max_norm(),
        ..OracleReport::default()
    };
    if params.g() == 1.0 {
        let exact = crate::evolution::analytic_propagator_g1(params)?.to_mat2();
        let converged = crate::evolution::converged_propagator(
            params,
            n_steps,
            G1_CAUCHY_TOL,
            G1_MAX_STEPS.max(n_steps),
        )?;
        report.max_g1_lab = (converged.u.to_mat2() - exact).max_norm();
        report.max_g1_lab_steps = converged.n_steps;
        report.max_g1_rotating = (rot.to_mat2() - exact).max_norm();
        report.n_g1_points = 1;
    }
    Ok(report)
}

/// Dual-route oracle over `n⁴` points spanning τ ∈ [100, 400] μs,
/// g ∈ [−0.3, 1], p⁺_cold ∈ [0.1, 0.45] and p⁺_hot ∈ [0.55, 0.99], with the
/// reference frequencies 2 and 3.6 kHz.
pub fn oracle_grid(n: usize, n_steps: usize) -> Result<OracleReport> {
    if n == 0 {
        return Err(OttoError::param("n", "need at least one point per axis"));
    }
    let base = EngineParams::nmr_reference(100.0, 0.0, 0.99)?;
    let mut points = Vec::with_capacity(n.pow(4));
    for &tau in &linspace(100.0, 400.0, n) {
        for &g in &linspace(-0.3, 1.0, n) {
            for &pc in &linspace(0.1, 0.45, n) {
                for &ph in &linspace(0.55, 0.99, n) {
                    points.push(base.with_tau_us(tau)?.with_g(g)?.with_populations(pc, ph)?);
                }
            }
        }
    }
    let reports: Vec<OracleReport> = points
        .par_iter()
        .map(|p| oracle_point(p, n_steps))
        .collect::<Result<_>>()?;
    Ok(reports
        .into_iter()
        .fold(OracleReport::default(), OracleReport::merge))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> EngineParams {
        EngineParams::nmr_reference(100.0, 0.2, 0.99).unwrap()
    }

    fn small(axis: SweepAxis, grid: Vec<f64>) -> SweepSpec {
        SweepSpec {
            resolution: 400,
            ..SweepSpec::new(base(), axis, grid)
        }
    }

    #[test]
    fn grid_validation() {
        assert!(small(SweepAxis::Tau, vec![]).validate().is_err());
        assert!(small(SweepAxis::Tau, vec![100.0, 100.0])
            .validate()
            .is_err());
        assert!(small(SweepAxis::Tau, vec![200.0, 100.0])
            .validate()
            .is_err());
        assert!(small(SweepAxis::Sigma, vec![0.1]).validate().is_err());
        let mut s = small(SweepAxis::G, vec![0.1]);
        s.g_series = vec![0.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn failing_points_become_tagged_rows() {
        let spec = small(SweepAxis::PPlusHot, vec![0.2, 0.5, 0.9, 1.5]);
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].error.is_none());
        assert!(rows[1]
            .error
            .as_deref()
            .unwrap()
            .starts_with("degenerate_temperature"));
        assert!(rows[2].error.is_none() && rows[2].eta.is_some());
        assert!(rows[3]
            .error
            .as_deref()
            .unwrap()
            .starts_with("invalid_param"));
        assert_eq!(rows[3].p_plus_hot, 1.5);
        assert!(rows[3].eta.is_none());
    }

    #[test]
    fn rows_are_ordered_by_g_series_then_grid() {
        let mut spec = small(SweepAxis::Tau, vec![80.0, 120.0, 160.0]);
        spec.g_series = vec![0.0, 0.2];
        let rows = run_sweep(&spec).unwrap();
        let keys: Vec<(usize, f64, f64)> = rows.iter().map(|r| (r.index, r.g, r.tau_us)).collect();
        assert_eq!(
            keys,
            vec![
                (0, 0.0, 80.0),
                (1, 0.0, 120.0),
                (2, 0.0, 160.0),
                (3, 0.2, 80.0),
                (4, 0.2, 120.0),
                (5, 0.2, 160.0)
            ]
        );
    }

    #[test]
    fn delta_eta_uses_same_tau_twin() {
        let mut spec = small(SweepAxis::Tau, vec![100.0, 140.0]);
        spec.outputs = [Output::DeltaEtaVsG0].into_iter().collect();
        spec.reference_tau_us = Some(140.0);
        let rows = run_sweep(&spec).unwrap();
        for r in &rows {
            let twin = simulate(
                &base().with_g(0.0).unwrap().with_tau_us(r.tau_us).unwrap(),
                400,
            )
            .unwrap();
            assert_eq!(r.eta_g0, Some(twin.eta));
            assert_eq!(r.delta_eta_vs_g0, Some(r.eta.unwrap() - twin.eta));
        }
        assert_eq!(rows[1].delta_eta_mixed_tau, rows[1].delta_eta_vs_g0);
        assert_ne!(rows[0].delta_eta_mixed_tau, rows[0].delta_eta_vs_g0);
    }

    #[test]
    fn zero_sigma_disorder_row_matches_clean_row() {
        let disorder = DisorderSpec {
            sigma: 0.0,
            n_samples: 8,
            n_steps: 400,
            ..DisorderSpec::default()
        };
        let mut spec = small(SweepAxis::Sigma, vec![0.0]);
        spec.disorder = Some(disorder);
        spec.outputs = [Output::Eta, Output::QuenchedEta].into_iter().collect();
        let row = &run_sweep(&spec).unwrap()[0];
        assert_eq!(row.quenched_eta, row.eta);
        assert_eq!(row.quenched_std_error, Some(0.0));
    }

    #[test]
    fn strict_mode_rejects_coarse_resolution() {
        let mut spec = small(SweepAxis::Tau, vec![100.0]);
        spec.strict = true;
        let row = &run_sweep(&spec).unwrap()[0];
        assert!(row.error.as_deref().unwrap().starts_with("integration"));
    }

    #[test]
    fn csv_round_trip_and_header_only_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        emit_csv(&[], &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.contains("work [h*kHz]"));
        assert!(parse_csv(&path).unwrap().is_empty());

        let mut spec = small(SweepAxis::PPlusHot, vec![0.5, 0.8, 0.99]);
        spec.outputs = [Output::Eta, Output::DeltaEtaVsG0, Output::Coherence]
            .into_iter()
            .collect();
        let rows = run_sweep(&spec).unwrap();
        emit_csv(&rows, &path).unwrap();
        assert_eq!(parse_csv(&path).unwrap(), rows);
        let json = dir.path().join("rows.json");
        emit_json(&rows, &json).unwrap();
        assert_eq!(parse_json(&json).unwrap(), rows);
    }

    #[test]
    fn emission_is_byte_identical_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small(SweepAxis::G, vec![0.0, 0.1, 0.2]);
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        emit_csv(&run_sweep(&spec).unwrap(), &a).unwrap();
        emit_csv(&run_sweep(&spec).unwrap(), &b).unwrap();
        assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
    }

    #[test]
    fn io_errors_carry_the_path() {
        let err = emit_csv(&[], Path::new("/nonexistent/dir/out.csv")).unwrap_err();
        assert!(err.is_io());
        assert!(err.to_string().contains("/nonexistent/dir/out.csv"));
    }

    #[test]
    fn grid_syntax() {
        assert_eq!(parse_grid("1,2.5,4").unwrap(), vec![1.0, 2.5, 4.0]);
        assert_eq!(parse_grid("50:400:8").unwrap().len(), 8);
        assert_eq!(parse_grid("50:400:8").unwrap()[7], 400.0);
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn config_file_sections_and_overrides() {
        let cfg = ConfigFile::parse(
            r#"
            [engine]
            tau = 140.0
            steps = 400

            [disorder]
            dist = "uniform"
            seed = 9

            [sweep.eta_p_hot]
            axis = "p_plus_hot"
            grid = "0.6:0.99:4"
            g_series = [0.0, 0.2]
            outputs = ["eta", "delta_eta_vs_g0"]

            [sweep.quenched]
            axis = "sigma"
            grid = [0.01, 0.05]
            outputs = ["quenched_eta"]
            disorder = { samples = 32, steps = 400 }
            engine = { g = 0.2 }
            "#,
        )
        .unwrap();
        assert!(cfg.sweep_section(None).is_err());
        let (_, eta_p_hot) = cfg.sweep_section(Some("eta_p_hot")).unwrap();
        let spec = eta_p_hot.to_spec(&cfg.engine, &cfg.disorder).unwrap();
        assert_eq!(spec.base.tau_us(), 140.0);
        assert_eq!(spec.grid.len(), 4);
        assert_eq!(spec.resolution, 400);
        assert_eq!(spec.disorder.unwrap().kind, DisorderKind::Uniform);

        let (_, quenched) = cfg.sweep_section(Some("quenched")).unwrap();
        let cli = SweepSection {
            engine: EngineSection {
                g: Some(0.3),
                ..Default::default()
            },
            ..Default::default()
        };
        let spec = quenched
            .overlay(&cli)
            .to_spec(&cfg.engine, &cfg.disorder)
            .unwrap();
        assert_eq!(spec.base.g(), 0.3);
        let d = spec.disorder.unwrap();
        assert_eq!((d.n_samples, d.seed, d.n_steps), (32, 9, 400));

        assert!(ConfigFile::parse("[engine]\nbogus = 1\n").is_err());
    }

    #[test]
    fn coarse_oracle_grid() {
        let r = oracle_grid(2, 2000).unwrap();
        assert_eq!((r.n_points, r.n_g1_points), (16, 8));
        assert!(r.max_eta_deviation < 1e-10);
        assert!(r.max_first_law < 1e-12);
        assert!(r.max_route_deviation < 1e-5);
        assert!(r.max_g1_rotating < 1e-8);
    }
}
