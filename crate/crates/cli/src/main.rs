//! `otto`: command-line front end for the driven-qubit Otto engine.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use otto_core::coherence::{stroke_coherence, stroke_coherence_series};
use otto_core::cycle::simulate;
use otto_core::disorder::quenched_efficiency;
use otto_core::evolution::{propagator_lab, step_halving_defect, DEFAULT_STEPS};
use otto_core::model::units::KHZ;
use otto_core::model::EngineParams;
use otto_core::sweep::{
    oracle_grid, run_sweep, write_csv, ConfigFile, DisorderSection, EngineSection, GridValue,
    SweepSection, STRICT_TOL,
};
use otto_core::{OttoError, Result};

use report::{Field, Report, Table};

/// Environment variable supplying the default random seed.
const SEED_ENV: &str = "OTTO_SEED";

#[derive(Parser)]
#[command(
    name = "otto",
    version,
    about = "Driven-qubit quantum Otto engine simulator"
)]
struct Cli {
    /// TOML configuration with [engine], [disorder] and [sweep.NAME] sections.
    /// Command-line flags override values from the file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one engine cycle and print work, heats and efficiency.
    Cycle {
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sweep one parameter and emit one row per grid point.
    Sweep {
        #[command(flatten)]
        sweep: SweepArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        disorder: DisorderArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// l1 coherence of the expanded and compressed states.
    Coherence {
        #[command(flatten)]
        engine: EngineArgs,
        /// Also sample both strokes at this many intervals.
        #[arg(long, value_name = "N")]
        series: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Quenched average of the efficiency over frequency disorder.
    Disorder {
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        disorder: DisorderArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Cross-check propagators and thermodynamics on a parameter grid.
    Verify {
        /// Grid points per axis (τ, g, p_cold, p_hot).
        #[arg(long, default_value_t = 5)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Default)]
struct EngineArgs {
    /// Cold-reservoir level splitting.
    #[arg(long, value_name = "KHZ")]
    nu_cold: Option<f64>,
    /// Hot-reservoir level splitting.
    #[arg(long, value_name = "KHZ")]
    nu_hot: Option<f64>,
    /// Stroke duration.
    #[arg(long, value_name = "US")]
    tau: Option<f64>,
    /// Ratio of the z field to the rotation frequency.
    #[arg(long, allow_negative_numbers = true)]
    g: Option<f64>,
    /// Excited population of the cold reservoir.
    #[arg(long, value_name = "P")]
    p_cold: Option<f64>,
    /// Excited population of the hot reservoir.
    #[arg(long, value_name = "P")]
    p_hot: Option<f64>,
    /// Propagator steps per stroke.
    #[arg(long, value_name = "N")]
    steps: Option<usize>,
    /// Require a step-halving defect below 1e-9.
    #[arg(long)]
    strict: bool,
}

impl EngineArgs {
    fn section(&self) -> EngineSection {
        EngineSection {
            nu_cold: self.nu_cold,
            nu_hot: self.nu_hot,
            tau: self.tau,
            g: self.g,
            p_cold: self.p_cold,
            p_hot: self.p_hot,
            steps: self.steps,
            strict: self.strict.then_some(true),
        }
    }
}

#[derive(Args, Default)]
struct DisorderArgs {
    /// Disorder strength.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_enum)]
    dist: Option<Dist>,
    /// Monte Carlo sample count.
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Gauss rule order per dimension.
    #[arg(long, value_name = "N")]
    order: Option<usize>,
    /// Propagator steps per disorder realization.
    #[arg(long, value_name = "N")]
    disorder_steps: Option<usize>,
    /// Random seed.
    #[arg(long, env = SEED_ENV)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Gaussian,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Mc,
    Quad,
}

impl DisorderArgs {
    fn section(&self) -> DisorderSection {
        DisorderSection {
            dist: self.dist.map(|d| {
                match d {
                    Dist::Gaussian => "gaussian",
                    Dist::Uniform => "uniform",
                }
                .to_string()
            }),
            sigma: self.sigma,
            samples: self.samples,
            seed: self.seed,
            method: self.method.map(|m| {
                match m {
                    Method::Mc => "mc",
                    Method::Quad => "quad",
                }
                .to_string()
            }),
            order: self.order,
            steps: self.disorder_steps,
        }
    }
}

#[derive(Args, Default)]
struct SweepArgs {
    /// Sweep section of the configuration file to run.
    #[arg(long)]
    name: Option<String>,
    /// tau, p_plus_hot, g or sigma.
    #[arg(long)]
    axis: Option<String>,
    /// `a,b,c` or `start:stop:count`.
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Field ratios evaluated at every grid point.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    g_series: Option<Vec<f64>>,
    /// Any of xi, eta, delta_eta_vs_g0, coherence, quenched_eta.
    #[arg(long, value_delimiter = ',')]
    outputs: Option<Vec<String>>,
    /// Also report Δη against the g = 0 engine at this τ.
    #[arg(long, value_name = "US")]
    reference_tau: Option<f64>,
}

#[derive(Args, Default)]
struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Defaults to the file extension, else csv for sweeps and text otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    #[value(skip)]
    Text,
}

impl OutputArgs {
    fn format(&self, fallback: Format) -> Format {
        if let Some(f) = self.format {
            return f;
        }
        match self.out.as_deref().and_then(Path::extension) {
            Some(ext) if ext == "json" => Format::Json,
            Some(ext) if ext == "csv" => Format::Csv,
            _ => fallback,
        }
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, text).map_err(|source| OttoError::Io {
                path: path.clone(),
                source,
            }),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        Some(p) => ConfigFile::load(p),
        None => Ok(ConfigFile::default()),
    }
}

struct Engine {
    params: EngineParams,
    steps: usize,
    strict: bool,
}

fn engine(cfg: &ConfigFile, args: &EngineArgs) -> Result<Engine> {
    let section = cfg.engine.overlay(&args.section());
    let engine = Engine {
        params: section.params()?,
        steps: section.steps.unwrap_or(DEFAULT_STEPS),
        strict: section.strict.unwrap_or(false),
    };
    if engine.strict {
        let defect = step_halving_defect(&engine.params, engine.steps)?;
        if !(defect < STRICT_TOL) {
            return Err(OttoError::Integration(format!(
                "step-halving defect {defect:e} at {} steps exceeds {STRICT_TOL:e}; raise --steps",
                engine.steps
            )));
        }
    }
    Ok(engine)
}

fn inputs(report: &mut Report, p: &EngineParams, steps: usize) {
    report.push("nu_cold [kHz]", Field::Num(p.nu_cold_khz()));
    report.push("nu_hot [kHz]", Field::Num(p.nu_hot_khz()));
    report.push("tau [us]", Field::Num(p.tau_us()));
    report.push("g", Field::Num(p.g()));
    report.push("p_plus_cold", Field::Num(p.p_plus_cold()));
    report.push("p_plus_hot", Field::Num(p.p_plus_hot()));
    report.push("n_steps", Field::Int(steps as u64));
}

fn cmd_cycle(cfg: &ConfigFile, args: &EngineArgs, output: &OutputArgs) -> Result<()> {
    let e = engine(cfg, args)?;
    let prop = propagator_lab(&e.params, e.steps)?;
    let c = otto_core::cycle::run_cycle_trace(&e.params, &prop.u)?;
    let mut r = Report::default();
    inputs(&mut r, &e.params, e.steps);
    r.push("xi", Field::Num(c.xi));
    r.push("work [h*kHz]", Field::Num(c.work / KHZ));
    r.push("q_hot [h*kHz]", Field::Num(c.q_hot / KHZ));
    r.push("q_cold [h*kHz]", Field::Num(c.q_cold / KHZ));
    r.push("eta", Field::Num(c.eta));
    r.push("eta_otto", Field::Num(c.eta_otto));
    r.push("mode", Field::Text(c.mode.as_str().into()));
    r.push("e_cold [h*kHz]", Field::Num(c.e_cold / KHZ));
    r.push("e_hot [h*kHz]", Field::Num(c.e_hot / KHZ));
    r.push("beta_cold [1/(h*kHz)]", Field::Num(c.beta_cold.0 * KHZ));
    r.push("beta_hot [1/(h*kHz)]", Field::Num(c.beta_hot.0 * KHZ));
    r.push(
        "first_law_residual [h*kHz]",
        Field::Num(c.first_law_residual() / KHZ),
    );
    r.push("unitarity_defect", Field::Num(prop.unitarity_defect));
    output.emit(&r.render(output.format(Format::Text)))
}

fn cmd_sweep(
    cfg: &ConfigFile,
    sweep: &SweepArgs,
    engine: &EngineArgs,
    disorder: &DisorderArgs,
    output: &OutputArgs,
) -> Result<()> {
    let from_file = if cfg.sweep.is_empty() && sweep.name.is_none() {
        SweepSection::default()
    } else {
        cfg.sweep_section(sweep.name.as_deref())?.1.clone()
    };
    let cli = SweepSection {
        axis: sweep.axis.clone(),
        grid: sweep.grid.clone().map(GridValue::Text),
        g_series: sweep.g_series.clone(),
        outputs: sweep.outputs.clone(),
        reference_tau: sweep.reference_tau,
        engine: engine.section(),
        disorder: disorder.section(),
    };
    let spec = from_file
        .overlay(&cli)
        .to_spec(&cfg.engine, &cfg.disorder)?;
    let records = run_sweep(&spec)?;
    let text = match output.format(Format::Csv) {
        Format::Json => serde_json::to_string_pretty(&records).expect("records serialize") + "\n",
        _ => {
            let mut buf = Vec::new();
            write_csv(&records, &mut buf).expect("in-memory write");
            String::from_utf8(buf).expect("csv is utf-8")
        }
    };
    output.emit(&text)
}

fn cmd_coherence(
    cfg: &ConfigFile,
    args: &EngineArgs,
    series: Option<usize>,
    output: &OutputArgs,
) -> Result<()> {
    let e = engine(cfg, args)?;
    let format = output.format(Format::Text);
    let Some(n) = series else {
        let c = stroke_coherence(&e.params, e.steps)?;
        let mut r = Report::default();
        inputs(&mut r, &e.params, e.steps);
        r.push("c_exp", Field::Num(c.c_exp));
        r.push("c_comp", Field::Num(c.c_comp));
        return output.emit(&r.render(format));
    };
    if n == 0 || e.steps % n != 0 {
        return Err(OttoError::Config(format!(
            "--series {n} must be positive and divide --steps {}",
            e.steps
        )));
    }
    let c = stroke_coherence_series(&e.params, e.steps, n)?;
    let mut table = Table::new(&["t [us]", "c_exp", "c_comp"]);
    let exp = c.expansion.unwrap_or_default();
    let comp = c.compression.unwrap_or_default();
    for ((t, a), (_, b)) in exp.iter().zip(&comp) {
        table.row(vec![Field::Num(t * 1e6), Field::Num(*a), Field::Num(*b)]);
    }
    output.emit(&table.render(format))
}

fn cmd_disorder(
    cfg: &ConfigFile,
    engine_args: &EngineArgs,
    disorder: &DisorderArgs,
    output: &OutputArgs,
) -> Result<()> {
    let e = engine(cfg, engine_args)?;
    let spec = cfg.disorder.overlay(&disorder.section()).spec()?;
    let q = quenched_efficiency(&e.params, &spec)?;
    let clean = simulate(&e.params, spec.n_steps)?;
    let mut r = Report::default();
    inputs(&mut r, &e.params, spec.n_steps);
    r.push("dist", Field::Text(spec.kind.to_string()));
    r.push("method", Field::Text(spec.method.to_string()));
    r.push("sigma", Field::Num(spec.sigma));
    r.push("seed", Field::Int(spec.seed));
    r.push("eta_clean", Field::Num(clean.eta));
    r.push("quenched_eta", Field::Num(q.mean_eta));
    r.push("std_error", Field::Num(q.std_error));
    r.push("n_effective", Field::Int(q.n_effective as u64));
    r.push("rejected", Field::Int(q.rejected as u64));
    r.push("redraws", Field::Int(q.redraws as u64));
    output.emit(&r.render(output.format(Format::Text)))
}

fn cmd_verify(points: usize, steps: usize, output: &OutputArgs) -> Result<()> {
    let o = oracle_grid(points, steps)?;
    let checks = [
        ("eta closed form vs trace", o.max_eta_deviation, 1e-10),
        ("first law [h*kHz]", o.max_first_law, 1e-12),
        ("lab vs rotating propagator", o.max_route_deviation, 1e-8),
        ("g = 1 analytic vs lab", o.max_g1_lab, 1e-10),
        ("g = 1 analytic vs rotating", o.max_g1_rotating, 1e-10),
    ];
    let mut r = Report::default();
    r.push("points", Field::Int(o.n_points as u64));
    r.push("n_steps", Field::Int(steps as u64));
    let mut failed = Vec::new();
    for (name, value, tol) in checks {
        r.push(name, Field::Num(value));
        if !(value < tol) {
            failed.push(format!("{name} = {value:e} (limit {tol:e})"));
        }
    }
    r.push(
        "status",
        Field::Text(if failed.is_empty() { "ok" } else { "failed" }.into()),
    );
    output.emit(&r.render(output.format(Format::Text)))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(OttoError::Invariant(failed.join("; ")))
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Cycle { engine, output } => cmd_cycle(&cfg, engine, output),
        Command::Sweep {
            sweep,
            engine,
            disorder,
            output,
        } => cmd_sweep(&cfg, sweep, engine, disorder, output),
        Command::Coherence {
            engine,
            series,
            output,
        } => cmd_coherence(&cfg, engine, *series, output),
        Command::Disorder {
            engine,
            disorder,
            output,
        } => cmd_disorder(&cfg, engine, disorder, output),
        Command::Verify {
            points,
            steps,
            output,
        } => cmd_verify(*points, *steps, output),
    }
}

fn exit_code(e: &OttoError) -> u8 {
    if e.is_io() {
        3
    } else if e.is_numerical() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("otto: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
