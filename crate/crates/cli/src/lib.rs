//! Command-line front end for `teleport-core`.
//!
//! [`run`] parses arguments and writes results; the `teleport` binary is a
//! thin wrapper around it. Exit codes: 0 success, 1 usage error, 2 numerical
//! or I/O failure, 3 failed verification.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod format;
pub mod reference;
pub mod verify;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use teleport_core::analysis::{
    critical_omega, critical_t0, fit_double_exponential, max_fidelity, sweep, Boundary, CriticalPointResult, Evaluator,
    FitResult, Grid, Scenario, SweepAxis, SweepQuantity, SweepSpec, SweepValue,
};
use teleport_core::closedform;
use teleport_core::environment::{channel_state_numeric, ChannelKind, EnvironmentKind};
use teleport_core::lindblad::IntegratorConfig;
use teleport_core::sphere::Quadrature;
use teleport_core::teleport::{average_fidelity, FidelityReport, RecoveryConfig};
use teleport_core::tolerance::Tolerances;

use format::{opt_sig9, sig9, Csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(#[from] teleport_core::error::Error),
    #[error("{0}")]
    Disagreement(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("verification failed")]
    Verify,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) | CliError::Disagreement(_) | CliError::Io { .. } => EXIT_NUMERICAL,
            CliError::Verify => EXIT_VERIFY,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "teleport", version, about = "Teleportation fidelity under decohered channels and disturbed recovery")]
pub struct Cli {
    /// Worker threads for concurrent evaluation [default: available parallelism]
    #[arg(long, global = true, env = "TELEPORT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Average fidelity at a single parameter point
    Fidelity(FidelityArgs),
    /// Fidelity or its maximum along one parameter axis
    Sweep(SweepArgs),
    /// Recovery duration of maximal fidelity over a grid of rotation rates
    CriticalTime(CriticalTimeArgs),
    /// Smallest rotation rate beating the classical limit, over a grid of transmission times
    CriticalOmega(CriticalOmegaArgs),
    /// Longest transmission time after which the classical limit can still be beaten
    CriticalT0(CriticalT0Args),
    /// Double-exponential fits of omega_c(t0)
    Fit(FitArgs),
    /// Run the self-check suite and print a JSON summary
    Verify(VerifyArgs),
    /// Compare computed values with the published reference values
    ReferenceReport(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Closed,
    Numeric,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvaluatorArg {
    Closed,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuadratureArg {
    /// Six octahedral points (exact)
    Six,
    /// Gauss-Legendre x trapezoid grid, sized by --n-theta/--n-phi
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TextFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Markdown,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    CriticalTime,
    Fidelity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Omega,
    T,
    T0,
    Gamma,
}

impl From<AxisArg> for SweepAxis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Omega => SweepAxis::Omega,
            AxisArg::T => SweepAxis::T,
            AxisArg::T0 => SweepAxis::T0,
            AxisArg::Gamma => SweepAxis::Gamma,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write to this file instead of standard output
    #[arg(long, short, env = "TELEPORT_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct NumericArgs {
    /// Spherical quadrature for simulated averages
    #[arg(long, value_enum, default_value = "six", env = "TELEPORT_QUADRATURE")]
    pub quadrature: QuadratureArg,
    #[arg(long, default_value_t = 64)]
    pub n_theta: usize,
    #[arg(long, default_value_t = 128)]
    pub n_phi: usize,
    /// Fixed integration step (capped at 1/(50 rate)) [default: 1/(2000 rate)]
    #[arg(long, env = "TELEPORT_STEP")]
    pub step: Option<f64>,
    /// Tolerance override, NAME=VALUE (e.g. two_path=1e-7); repeatable
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tolerances: Vec<String>,
}

impl NumericArgs {
    fn quadrature(&self) -> CliResult<Quadrature> {
        match self.quadrature {
            QuadratureArg::Six => Ok(Quadrature::Octahedral6),
            QuadratureArg::Dense if self.n_theta == 0 || self.n_phi == 0 => {
                Err(CliError::Usage("--n-theta and --n-phi must be positive".into()))
            }
            QuadratureArg::Dense => Ok(Quadrature::Dense { n_theta: self.n_theta, n_phi: self.n_phi }),
        }
    }

    fn tolerances(&self) -> CliResult<Tolerances> {
        let mut tol = Tolerances::DEFAULT;
        for spec in &self.tolerances {
            let (name, value) =
                spec.split_once('=').ok_or_else(|| CliError::Usage(format!("expected NAME=VALUE, got {spec:?}")))?;
            let value: f64 = value
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| CliError::Usage(format!("invalid tolerance value in {spec:?}")))?;
            let slot = match name {
                "trace" => &mut tol.trace,
                "hermiticity" => &mut tol.hermiticity,
                "psd" => &mut tol.psd,
                "evolve_min_eigenvalue" => &mut tol.evolve_min_eigenvalue,
                "richardson" => &mut tol.richardson,
                "jacobi_offdiag" => &mut tol.jacobi_offdiag,
                "two_path" => &mut tol.two_path,
                "quadrature" => &mut tol.quadrature,
                "channel_state" => &mut tol.channel_state,
                other => return Err(CliError::Usage(format!("unknown tolerance {other:?}"))),
            };
            *slot = value;
        }
        Ok(tol)
    }

    fn integrator(&self) -> CliResult<IntegratorConfig> {
        if let Some(h) = self.step {
            if !(h > 0.0) || !h.is_finite() {
                return Err(CliError::Usage(format!("--step must be positive, got {h}")));
            }
        }
        Ok(IntegratorConfig { step: self.step, tolerances: self.tolerances()?, ..IntegratorConfig::default() })
    }

    fn evaluator(&self, kind: EvaluatorArg) -> CliResult<Evaluator> {
        Ok(match kind {
            EvaluatorArg::Closed => Evaluator::Closed,
            EvaluatorArg::Numeric => {
                Evaluator::Numeric { quadrature: self.quadrature()?, integrator: self.integrator()? }
            }
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct FidelityArgs {
    /// Channel: p (perfect), di, no or de
    #[arg(long, default_value = "p", env = "TELEPORT_CHANNEL")]
    pub channel: ChannelKind,
    /// Recovery environment: di, no or de
    #[arg(long, default_value = "di", env = "TELEPORT_RECOVERY")]
    pub recovery: EnvironmentKind,
    #[arg(long, default_value_t = 0.1, env = "TELEPORT_GAMMA")]
    pub gamma: f64,
    #[arg(long, env = "TELEPORT_OMEGA")]
    pub omega: f64,
    /// Recovery duration
    #[arg(long, env = "TELEPORT_T")]
    pub t: f64,
    /// Channel transmission time
    #[arg(long, default_value_t = 0.0, env = "TELEPORT_T0")]
    pub t0: f64,
    #[arg(long, value_enum, default_value = "closed", env = "TELEPORT_METHOD")]
    pub method: MethodArg,
    /// Also print outcome probabilities and fidelities at the six quadrature points
    #[arg(long, short)]
    pub verbose: bool,
    #[arg(long, value_enum, default_value = "text")]
    pub format: TextFormat,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: AxisArg,
    /// Axis values as lo:hi:n (inclusive, n points)
    #[arg(long)]
    pub grid: Grid,
    #[arg(long, value_enum, default_value = "critical-time")]
    pub quantity: QuantityArg,
    #[arg(long, default_value = "p", env = "TELEPORT_CHANNEL")]
    pub channel: ChannelKind,
    #[arg(long, default_value = "di", env = "TELEPORT_RECOVERY")]
    pub recovery: EnvironmentKind,
    #[arg(long, default_value_t = 0.1, env = "TELEPORT_GAMMA")]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0, env = "TELEPORT_OMEGA")]
    pub omega: f64,
    #[arg(long, default_value_t = 0.0, env = "TELEPORT_T")]
    pub t: f64,
    #[arg(long, default_value_t = 0.0, env = "TELEPORT_T0")]
    pub t0: f64,
    #[arg(long, value_enum, default_value = "closed", env = "TELEPORT_METHOD")]
    pub method: EvaluatorArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CriticalTimeArgs {
    #[arg(long, default_value = "p", env = "TELEPORT_CHANNEL")]
    pub channel: ChannelKind,
    /// Comma-separated recovery environments
    #[arg(long, value_delimiter = ',', default_value = "di", env = "TELEPORT_RECOVERY")]
    pub recovery: Vec<EnvironmentKind>,
    #[arg(long, default_value_t = 0.1, env = "TELEPORT_GAMMA")]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.0, env = "TELEPORT_T0")]
    pub t0: f64,
    /// Rotation rates as lo:hi:n
    #[arg(long, conflicts_with = "omega")]
    pub omega_grid: Option<Grid>,
    /// A single rotation rate
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, value_enum, default_value = "closed", env = "TELEPORT_METHOD")]
    pub method: EvaluatorArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CriticalOmegaArgs {
    #[arg(long, default_value = "p", env = "TELEPORT_CHANNEL")]
    pub channel: ChannelKind,
    #[arg(long, value_delimiter = ',', default_value = "di", env = "TELEPORT_RECOVERY")]
    pub recovery: Vec<EnvironmentKind>,
    #[arg(long, default_value_t = 0.1, env = "TELEPORT_GAMMA")]
    pub gamma: f64,
    /// Transmission times as lo:hi:n
    #[arg(long, conflicts_with = "t0")]
    pub t0_grid: Option<Grid>,
    /// A single transmission time [default: 0]
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long, value_enum, default_value = "closed", env = "TELEPORT_METHOD")]
    pub method: EvaluatorArg,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    #[command(flatten)]
    pub numeric: NumericArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CriticalT0Args {
    /// Comma-separated channel environments
    #[arg(long, value_delimiter = ',', default_value = "di,no,de", env = "TELEPORT_CHANNEL")]
    pub channel: Vec<EnvironmentKind>,
    #[arg(long, value_delimiter = ',', default_value = "di", env = "TELEPORT_RECOVERY")]
    pub recovery: Vec<EnvironmentKind>,
    #[arg(long, default_value_t = 0.1, env = "TELEPORT_GAMMA")]
    pub gamma: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// CSV written by `critical-omega`; without it omega_c is computed here
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Fit window lo:hi [default: the reference window of each channel, or the data range with --input]
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "di", env = "TELEPORT_CHANNEL")]
    pub channel: Vec<EnvironmentKind>,
    #[arg(long, value_delimiter = ',', default_value = "di,no,de", env = "TELEPORT_RECOVERY")]
    pub recovery: Vec<EnvironmentKind>,
    #[arg(long, default_value_t = 0.1, env = "TELEPORT_GAMMA")]
    pub gamma: f64,
    /// Transmission times per curve when computing
    #[arg(long, default_value_t = 40)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Reduced grids
    #[arg(long)]
    pub quick: bool,
    /// Test hook: double gamma on the simulated side of the two-path check
    #[arg(long)]
    pub inject_fault: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: ReportFormat,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let shown = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(shown.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(shown.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            if !matches!(e, CliError::Verify) {
                let _ = writeln!(stderr, "error: {e}");
            }
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    // Commands buffer standard output so the pool closure stays `Send`.
    let mut buffer = Vec::new();
    let result = pool.install(|| match cli.command {
        Command::Fidelity(a) => cmd_fidelity(&a, &mut buffer),
        Command::Sweep(a) => cmd_sweep(&a, &mut buffer),
        Command::CriticalTime(a) => cmd_critical_time(&a, &mut buffer),
        Command::CriticalOmega(a) => cmd_critical_omega(&a, &mut buffer),
        Command::CriticalT0(a) => cmd_critical_t0(&a, &mut buffer),
        Command::Fit(a) => cmd_fit(&a, &mut buffer),
        Command::Verify(a) => cmd_verify(&a, &mut buffer),
        Command::ReferenceReport(a) => cmd_reference_report(&a, &mut buffer),
    });
    stdout.write_all(&buffer).map_err(|source| io_error(Path::new("<stdout>"), source))?;
    result
}

fn emit(out: &OutputArgs, content: &str, stdout: &mut Vec<u8>) -> CliResult<()> {
    match &out.output {
        Some(path) => std::fs::write(path, content).map_err(|source| io_error(path, source)),
        None => stdout.write_all(content.as_bytes()).map_err(|source| io_error(Path::new("<stdout>"), source)),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), source }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn nonnegative(name: &str, v: f64) -> CliResult<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must be finite and >= 0, got {v}")))
    }
}

fn grid_values(g: &Option<Grid>, single: Option<f64>, default: f64) -> Vec<f64> {
    match (g, single) {
        (Some(g), _) => g.values(),
        (None, Some(v)) => vec![v],
        (None, None) => vec![default],
    }
}

#[derive(Serialize)]
struct FidelityOutput<'a> {
    channel: ChannelKind,
    recovery: EnvironmentKind,
    gamma: f64,
    omega: f64,
    t: f64,
    t0: f64,
    closed: Option<f64>,
    numeric: Option<&'a FidelityReport>,
    difference: Option<f64>,
}

fn cmd_fidelity(a: &FidelityArgs, stdout: &mut Vec<u8>) -> CliResult<()> {
    for (name, v) in [("gamma", a.gamma), ("omega", a.omega), ("t", a.t), ("t0", a.t0)] {
        nonnegative(name, v)?;
    }
    let quadrature = a.numeric.quadrature()?;
    let integrator = a.numeric.integrator()?;
    let closed = match a.method {
        MethodArg::Closed | MethodArg::Both => {
            Some(closedform::fidelity(a.channel, a.recovery, a.gamma, a.omega, a.t, a.t0)?)
        }
        MethodArg::Numeric => None,
    };
    let numeric = match a.method {
        MethodArg::Numeric | MethodArg::Both => {
            let state = channel_state_numeric(a.channel, a.gamma, a.t0, &integrator)?;
            let rec = RecoveryConfig::new(a.recovery, a.gamma, a.omega, a.t)?;
            Some(average_fidelity(&state, &rec, quadrature, &integrator)?)
        }
        MethodArg::Closed => None,
    };
    let difference = match (closed, &numeric) {
        (Some(c), Some(n)) => Some((c - n.fidelity).abs()),
        _ => None,
    };

    let content = match a.format {
        TextFormat::Json => to_json(&FidelityOutput {
            channel: a.channel,
            recovery: a.recovery,
            gamma: a.gamma,
            omega: a.omega,
            t: a.t,
            t0: a.t0,
            closed,
            numeric: numeric.as_ref(),
            difference,
        }),
        TextFormat::Text => {
            let mut s = format!(
                "channel {} recovery {} gamma {} omega {} t {} t0 {}\n",
                a.channel, a.recovery, a.gamma, a.omega, a.t, a.t0
            );
            if let Some(c) = closed {
                s += &format!("F closed  = {c:.9}\n");
            }
            if let Some(n) = &numeric {
                s += &format!("F numeric = {:.9}\n", n.fidelity);
            }
            if let Some(d) = difference {
                s += &format!("|difference| = {d:.3e}\n");
            }
            if a.verbose {
                if let Some(n) = &numeric {
                    s += &verbose_points(n);
                }
            }
            s
        }
    };
    emit(&a.out, &content, stdout)?;
    let tol = a.numeric.tolerances()?.two_path;
    match difference {
        Some(d) if d > tol => Err(CliError::Disagreement(format!("closed and numeric differ by {d:e} > {tol:e}"))),
        _ => Ok(()),
    }
}

fn verbose_points(report: &FidelityReport) -> String {
    let mut s = String::new();
    if let (Some(p), Some(f)) = (report.probabilities, report.fidelities) {
        s += "outcome  P_m  f_m (sphere averages)\n";
        for m in 0..4 {
            s += &format!("{m}  {}  {}\n", sig9(p[m]), sig9(f[m]));
        }
    }
    if !report.points.is_empty() {
        s += "theta  phi  weight  P_0..P_3  f_0..f_3\n";
        for pt in &report.points {
            let cells: Vec<String> = [pt.theta, pt.phi, pt.weight]
                .into_iter()
                .chain(pt.probabilities)
                .chain(pt.fidelities)
                .map(sig9)
                .collect();
            s += &cells.join("  ");
            s.push('\n');
        }
    }
    s += &format!(
        "worst trace drift {:.3e}  hermiticity drift {:.3e}  min eigenvalue {:.3e}\n",
        report.worst_trace_drift, report.worst_hermiticity_drift, report.min_eigenvalue
    );
    s
}

#[derive(Serialize)]
struct SweepJsonRow {
    axis: SweepAxis,
    value: f64,
    #[serde(flatten)]
    result: SweepValue,
}

fn cmd_sweep(a: &SweepArgs, stdout: &mut Vec<u8>) -> CliResult<()> {
    for (name, v) in [("gamma", a.gamma), ("omega", a.omega), ("t", a.t), ("t0", a.t0)] {
        nonnegative(name, v)?;
    }
    let quantity = match a.quantity {
        QuantityArg::CriticalTime => SweepQuantity::CriticalTime,
        QuantityArg::Fidelity => SweepQuantity::Fidelity,
    };
    let axis = SweepAxis::from(a.axis);
    if axis == SweepAxis::T && quantity == SweepQuantity::CriticalTime {
        return Err(CliError::Usage("--axis t needs --quantity fidelity".into()));
    }
    let ev = a.numeric.evaluator(a.method)?;
    let spec = SweepSpec {
        axis,
        values: a.grid.values(),
        quantity,
        scenario: Scenario::new(a.channel, a.recovery, a.gamma, a.t0)?,
        omega: a.omega,
        t: a.t,
    };
    let rows = sweep(&ev, &spec)?;
    let content = match a.format {
        TableFormat::Json => {
            to_json(&rows.iter().map(|r| SweepJsonRow { axis, value: r.value, result: r.result }).collect::<Vec<_>>())
        }
        TableFormat::Csv => {
            let mut csv = match quantity {
                SweepQuantity::CriticalTime => Csv::new(&["axis", "value", "t_c", "f_max"]),
                SweepQuantity::Fidelity => Csv::new(&["axis", "value", "F"]),
            };
            for r in &rows {
                let mut cells = vec![axis.label().to_string(), sig9(r.value)];
                match r.result {
                    SweepValue::Critical { t_c, f_max } => cells.extend([sig9(t_c), sig9(f_max)]),
                    SweepValue::Fidelity { f } => cells.push(sig9(f)),
                }
                csv.row(&cells);
            }
            csv.finish()
        }
    };
    emit(&a.out, &content, stdout)
}

#[derive(Serialize)]
struct CriticalJsonRow {
    alpha: ChannelKind,
    beta: EnvironmentKind,
    gamma: f64,
    t0: f64,
    omega: Option<f64>,
    result: CriticalPointResult,
}

fn boundary_label(b: Boundary) -> &'static str {
    match b {
        Boundary::Interior => "interior",
        Boundary::Left => "left",
        Boundary::Right => "right",
    }
}

fn cmd_critical_time(a: &CriticalTimeArgs, stdout: &mut Vec<u8>) -> CliResult<()> {
    nonnegative("gamma", a.gamma)?;
    nonnegative("t0", a.t0)?;
    let omegas = grid_values(&a.omega_grid, a.omega, f64::NAN);
    if omegas.iter().any(|w| w.is_nan()) {
        return Err(CliError::Usage("one of --omega-grid or --omega is required".into()));
    }
    for &w in &omegas {
        nonnegative("omega", w)?;
    }
    let ev = a.numeric.evaluator(a.method)?;
    let mut rows = Vec::new();
    for &beta in &a.recovery {
        let scenario = Scenario::new(a.channel, beta, a.gamma, a.t0)?;
        let results: Vec<CriticalPointResult> = {
            use rayon::prelude::*;
            omegas.par_iter().map(|&w| max_fidelity(&ev, &scenario, w)).collect::<Result<_, _>>()?
        };
        for (&omega, result) in omegas.iter().zip(results) {
            rows.push(CriticalJsonRow { alpha: a.channel, beta, gamma: a.gamma, t0: a.t0, omega: Some(omega), result });
        }
    }
    let content = match a.format {
        TableFormat::Json => to_json(&rows),
        TableFormat::Csv => {
            let mut csv = Csv::new(&["alpha", "beta", "gamma", "t0", "omega", "t_c", "f_max", "boundary"]);
            for r in &rows {
                csv.row(&[
                    r.alpha.label().into(),
                    r.beta.label().into(),
                    sig9(r.gamma),
                    sig9(r.t0),
                    opt_sig9(r.omega),
                    sig9(r.result.t_c),
                    sig9(r.result.f_max),
                    boundary_label(r.result.boundary).into(),
                ]);
            }
            csv.finish()
        }
    };
    emit(&a.out, &content, stdout)
}

fn cmd_critical_omega(a: &CriticalOmegaArgs, stdout: &mut Vec<u8>) -> CliResult<()> {
    nonnegative("gamma", a.gamma)?;
    let t0s = grid_values(&a.t0_grid, a.t0, 0.0);
    for &t0 in &t0s {
        nonnegative("t0", t0)?;
    }
    let ev = a.numeric.evaluator(a.method)?;
    let mut rows = Vec::new();
    for &beta in &a.recovery {
        let results: Vec<CriticalPointResult> = {
            use rayon::prelude::*;
            t0s.par_iter()
                .map(|&t0| critical_omega(&ev, &Scenario::new(a.channel, beta, a.gamma, t0)?))
                .collect::<Result<_, _>>()?
        };
        for (&t0, result) in t0s.iter().zip(results) {
            rows.push(CriticalJsonRow { alpha: a.channel, beta, gamma: a.gamma, t0, omega: None, result });
        }
    }
    let content = match a.format {
        TableFormat::Json => to_json(&rows),
        TableFormat::Csv => {
            let mut csv = Csv::new(&["alpha", "beta", "gamma", "t0", "omega_c", "f_max_at_omega_c"]);
            for r in &rows {
                let f = r.result.omega_c.map(|_| r.result.f_max);
                csv.row(&[
                    r.alpha.label().into(),
                    r.beta.label().into(),
                    sig9(r.gamma),
                    sig9(r.t0),
                    opt_sig9(r.result.omega_c),
                    opt_sig9(f),
                ]);
            }
            csv.finish()
        }
    };
    emit(&a.out, &content, stdout)
}

#[derive(Serialize)]
struct T0JsonRow {
    alpha: EnvironmentKind,
    beta: EnvironmentKind,
    gamma: f64,
    omega_ref: f64,
    result: CriticalPointResult,
}

fn cmd_critical_t0(a: &CriticalT0Args, stdout: &mut Vec<u8>) -> CliResult<()> {
    if !(a.gamma > 0.0) || !a.gamma.is_finite() {
        return Err(CliError::Usage(format!("--gamma must be positive, got {}", a.gamma)));
    }
    let mut rows = Vec::new();
    for &alpha in &a.channel {
        for &beta in &a.recovery {
            let result = critical_t0(&Evaluator::Closed, alpha, beta, a.gamma)?;
            rows.push(T0JsonRow {
                alpha,
                beta,
                gamma: a.gamma,
                omega_ref: teleport_core::analysis::OMEGA_REF_FACTOR * a.gamma,
                result,
            });
        }
    }
    let content = match a.format {
        TableFormat::Json => to_json(&rows),
        TableFormat::Csv => {
            let mut csv =
                Csv::new(&["alpha", "beta", "gamma", "omega_ref", "t0_c", "sensitivity_omega_ref", "sensitivity_t0_c"]);
            for r in &rows {
                let s = r.result.sensitivity;
                csv.row(&[
                    r.alpha.label().into(),
                    r.beta.label().into(),
                    sig9(r.gamma),
                    sig9(r.omega_ref),
                    opt_sig9(r.result.t0_c),
                    opt_sig9(s.map(|s| s.omega_ref)),
                    opt_sig9(s.and_then(|s| s.t0_c)),
                ]);
            }
            csv.finish()
        }
    };
    emit(&a.out, &content, stdout)
}

fn parse_window(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Usage(format!("expected --window lo:hi, got {s:?}"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

type Curves = Vec<((String, String), Vec<(f64, f64)>)>;

/// Groups `critical-omega` CSV rows by (alpha, beta), keeping file order.
fn read_curves(path: &Path) -> CliResult<Curves> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').map(str::trim).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| *h == name)
            .ok_or_else(|| CliError::Usage(format!("{}: missing column {name}", path.display())))
    };
    let (ia, ib, it, iw) = (col("alpha")?, col("beta")?, col("t0")?, col("omega_c")?);
    let mut curves: Curves = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || CliError::Usage(format!("{}: malformed row {}", path.display(), n + 2));
        let get = |i: usize| cells.get(i).copied().ok_or_else(bad);
        let (alpha, beta) = (get(ia)?.to_string(), get(ib)?.to_string());
        let omega_c = get(iw)?;
        if omega_c.is_empty() {
            continue;
        }
        let point = (get(it)?.parse::<f64>().map_err(|_| bad())?, omega_c.parse::<f64>().map_err(|_| bad())?);
        match curves.iter_mut().find(|(k, _)| k.0 == alpha && k.1 == beta) {
            Some((_, pts)) => pts.push(point),
            None => curves.push(((alpha, beta), vec![point])),
        }
    }
    Ok(curves)
}

#[derive(Serialize)]
struct FitJsonRow {
    alpha: String,
    beta: String,
    #[serde(flatten)]
    fit: FitResult,
}

fn cmd_fit(a: &FitArgs, stdout: &mut Vec<u8>) -> CliResult<()> {
    let window = a.window.as_deref().map(parse_window).transpose()?;
    let curves: Curves = match &a.input {
        Some(path) => read_curves(path)?,
        None => {
            if !(a.gamma > 0.0) || !a.gamma.is_finite() {
                return Err(CliError::Usage(format!("--gamma must be positive, got {}", a.gamma)));
            }
            let mut curves = Vec::new();
            for &alpha in &a.channel {
                let (lo, hi) = window.unwrap_or_else(|| reference::fit_window(alpha));
                for &beta in &a.recovery {
                    let grid = Grid::new(lo, hi, a.points)?;
                    let pts = reference::omega_c_curve(&Evaluator::Closed, alpha, beta, a.gamma, grid)?;
                    curves.push(((alpha.label().to_string(), beta.label().to_string()), pts));
                }
            }
            curves
        }
    };
    let mut rows = Vec::new();
    for ((alpha, beta), pts) in curves {
        let pts: Vec<(f64, f64)> = match window {
            Some((lo, hi)) => pts.into_iter().filter(|p| p.0 >= lo && p.0 <= hi).collect(),
            None => pts,
        };
        let fit = fit_double_exponential(&pts)?;
        rows.push(FitJsonRow { alpha, beta, fit });
    }
    let content = match a.format {
        TableFormat::Json => to_json(&rows),
        TableFormat::Csv => {
            let mut csv = Csv::new(&["alpha", "beta", "a", "b", "c", "d", "rms", "window_lo", "window_hi"]);
            for r in &rows {
                let f = &r.fit;
                csv.row(&[
                    r.alpha.clone(),
                    r.beta.clone(),
                    sig9(f.a),
                    sig9(f.b),
                    sig9(f.c),
                    sig9(f.d),
                    sig9(f.rms_residual),
                    sig9(f.fit_window.0),
                    sig9(f.fit_window.1),
                ]);
            }
            csv.finish()
        }
    };
    emit(&a.out, &content, stdout)
}

fn cmd_verify(a: &VerifyArgs, stdout: &mut Vec<u8>) -> CliResult<()> {
    let summary = verify::run(verify::VerifyOptions { quick: a.quick, inject_fault: a.inject_fault });
    emit(&a.out, &to_json(&summary), stdout)?;
    if summary.passed {
        Ok(())
    } else {
        Err(CliError::Verify)
    }
}

fn cmd_reference_report(a: &ReportArgs, stdout: &mut Vec<u8>) -> CliResult<()> {
    let report = reference::build(|_| {})?;
    let content = match a.format {
        ReportFormat::Json => to_json(&report),
        ReportFormat::Markdown => reference::markdown(&report),
    };
    emit(&a.out, &content, stdout)
}
