//! Critical points, parameter sweeps and double-exponential fits.
//!
//! Every search here goes through an [`Evaluator`], so the same routine runs
//! on the closed forms or on the simulated pipeline.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::closedform;
use crate::environment::{channel_state_numeric, ChannelKind, EnvironmentKind};
use crate::error::{Error, Result};
use crate::lindblad::IntegratorConfig;
use crate::optim::{bisect, golden_section_max, nelder_mead, NelderMeadConfig};
use crate::sphere::Quadrature;
use crate::teleport::{average_fidelity, RecoveryConfig};

/// Classical limit of the average fidelity.
pub const CLASSICAL_FIDELITY: f64 = 2.0 / 3.0;

/// Floor on the rate used to size the t-search window.
pub const OMEGA_FLOOR: f64 = 1e-4;

/// Width below which golden-section refinement of `t_c` stops.
pub const T_TOLERANCE: f64 = 1e-10;

/// Local maxima whose value is within this of the global one are reported.
pub const NEAR_MAXIMUM: f64 = 1e-4;

pub const OMEGA_BRACKET: (f64, f64) = (1e-4, 16.0);
pub const OMEGA_BRACKET_LIMIT: f64 = 1024.0;
pub const OMEGA_TOLERANCE: f64 = 1e-7;

pub const T0_TOLERANCE: f64 = 1e-5;
/// `omega_ref = OMEGA_REF_FACTOR * gamma` stands in for the large-rate limit.
pub const OMEGA_REF_FACTOR: f64 = 1e4;

/// Channel and recovery settings that stay fixed while a search varies
/// `omega` or `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    pub channel: ChannelKind,
    pub beta: EnvironmentKind,
    pub gamma: f64,
    pub t0: f64,
}

impl Scenario {
    pub fn new(channel: ChannelKind, beta: EnvironmentKind, gamma: f64, t0: f64) -> Result<Self> {
        for (name, x) in [("gamma", gamma), ("t0", t0)] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {x}")));
            }
        }
        Ok(Self { channel, beta, gamma, t0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Evaluator {
    #[default]
    Closed,
    Numeric {
        quadrature: Quadrature,
        integrator: IntegratorConfig,
    },
}

impl Evaluator {
    pub fn numeric() -> Self {
        Self::Numeric { quadrature: Quadrature::Octahedral6, integrator: IntegratorConfig::default() }
    }

    /// Average fidelity of `scenario` after recovering at rate `omega` for `t`.
    pub fn fidelity(&self, scenario: &Scenario, omega: f64, t: f64) -> Result<f64> {
        match self {
            Self::Closed => {
                closedform::fidelity(scenario.channel, scenario.beta, scenario.gamma, omega, t, scenario.t0)
            }
            Self::Numeric { quadrature, integrator } => {
                let state = channel_state_numeric(scenario.channel, scenario.gamma, scenario.t0, integrator)?;
                let rec = RecoveryConfig::new(scenario.beta, scenario.gamma, omega, t)?;
                Ok(average_fidelity(&state, &rec, *quadrature, integrator)?.fidelity)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Interior,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalMaximum {
    pub t: f64,
    pub f: f64,
}

/// Where a search looked and how long it took.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchInfo {
    pub lo: f64,
    pub hi: f64,
    /// Scan spacing for `t` searches; absent for bisections.
    pub step: Option<f64>,
    pub iterations: usize,
    pub evaluations: usize,
}

/// Root recomputed at a different reference rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sensitivity {
    pub omega_ref: f64,
    pub t0_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointResult {
    /// Recovery duration of the maximum (at `omega_c` / `t0_c` when those are set).
    pub t_c: f64,
    pub f_max: f64,
    pub omega_c: Option<f64>,
    pub t0_c: Option<f64>,
    pub boundary: Boundary,
    /// Local maxima within [`NEAR_MAXIMUM`] of `f_max`, including the best.
    pub near_maxima: Vec<LocalMaximum>,
    pub search: SearchInfo,
    pub sensitivity: Option<Sensitivity>,
    /// Why a root is absent, if it is.
    pub note: Option<String>,
}

fn checked(t: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(t))
    }
}

/// Scan window and spacing used for the maximization over `t`.
pub fn time_window(omega: f64, gamma: f64) -> (f64, f64) {
    let w = omega.max(OMEGA_FLOOR);
    let oscillation = 4.0 * PI / w;
    let window = if gamma > 0.0 { oscillation.max(20.0 / gamma) } else { oscillation };
    (window, (PI / (20.0 * w)).min(window / 2000.0))
}

/// Global maximum of `f` over `t` in `(0, T]`.
///
/// A uniform scan locates candidate peaks; the best three are refined by
/// golden-section search.
pub fn critical_time<F>(f: F, omega: f64, gamma: f64) -> Result<CriticalPointResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(omega >= 0.0) || !omega.is_finite() || !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("omega = {omega}, gamma = {gamma}")));
    }
    let (window, step) = time_window(omega, gamma);
    let n = (window / step).ceil() as usize;
    let ts: Vec<f64> = (1..=n).map(|i| if i == n { window } else { i as f64 * step }).collect();
    let values: Vec<f64> = ts.par_iter().map(|&t| f(t).and_then(|v| checked(t, v))).collect::<Result<_>>()?;

    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| (i == 0 || values[i] >= values[i - 1]) && (i + 1 == n || values[i] >= values[i + 1]))
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let mut evaluations = n;
    let mut iterations = 0;
    let mut refined = Vec::new();
    for &i in peaks.iter().take(3) {
        let lo = ts[i.saturating_sub(1)];
        let hi = ts[(i + 1).min(n - 1)];
        let mut count = 0;
        let best = golden_section_max(
            |t| {
                count += 1;
                f(t)
            },
            lo,
            hi,
            T_TOLERANCE,
        )?;
        evaluations += count;
        iterations += best.iterations;
        let value = if values[i] > best.value { (ts[i], values[i]) } else { (best.x, best.value) };
        refined.push((i, value));
    }
    let &(best_index, (t_c, f_max)) = refined
        .iter()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(b.0.cmp(&a.0)))
        .ok_or_else(|| Error::InvalidParameter("empty scan".into()))?;

    let boundary = if best_index == 0 && t_c <= ts[0] {
        Boundary::Left
    } else if best_index + 1 == n && t_c >= window {
        Boundary::Right
    } else {
        Boundary::Interior
    };

    let mut near_maxima: Vec<LocalMaximum> = refined
        .iter()
        .map(|&(_, (t, f))| LocalMaximum { t, f })
        .chain(peaks.iter().skip(3).map(|&i| LocalMaximum { t: ts[i], f: values[i] }))
        .filter(|m| m.f >= f_max - NEAR_MAXIMUM)
        .collect();
    near_maxima.sort_by(|a, b| a.t.total_cmp(&b.t));

    Ok(CriticalPointResult {
        t_c,
        f_max,
        omega_c: None,
        t0_c: None,
        boundary,
        near_maxima,
        search: SearchInfo { lo: ts[0], hi: window, step: Some(step), iterations, evaluations },
        sensitivity: None,
        note: None,
    })
}

/// Maximum over `t` of the fidelity at rotation rate `omega`.
pub fn max_fidelity(evaluator: &Evaluator, scenario: &Scenario, omega: f64) -> Result<CriticalPointResult> {
    critical_time(|t| evaluator.fidelity(scenario, omega, t), omega, scenario.gamma)
}

const MONOTONE_SAMPLES: usize = 16;
const MONOTONE_SLACK: f64 = 1e-9;

/// Smallest rotation rate at which the best achievable fidelity reaches 2/3.
///
/// Returns a result with `omega_c = None` and an explanatory `note` when the
/// classical limit is never crossed inside the maximal bracket.
pub fn critical_omega(evaluator: &Evaluator, scenario: &Scenario) -> Result<CriticalPointResult> {
    let g = |omega: f64| -> Result<f64> { Ok(max_fidelity(evaluator, scenario, omega)?.f_max - CLASSICAL_FIDELITY) };
    let (lo, mut hi) = OMEGA_BRACKET;
    let g_lo = g(lo)?;
    let mut g_hi = g(hi)?;
    let mut evaluations = 2;
    while g_hi <= 0.0 && hi < OMEGA_BRACKET_LIMIT {
        hi *= 2.0;
        g_hi = g(hi)?;
        evaluations += 1;
    }
    let no_root = |note: String, at: f64| -> Result<CriticalPointResult> {
        let best = max_fidelity(evaluator, scenario, at)?;
        Ok(CriticalPointResult {
            note: Some(note),
            search: SearchInfo { lo, hi, step: None, iterations: 0, evaluations: evaluations + 1 },
            ..best
        })
    };
    if g_lo > 0.0 {
        return no_root(format!("fidelity already exceeds 2/3 at omega = {lo}"), lo);
    }
    if g_hi <= 0.0 {
        return no_root(format!("fidelity stays at or below 2/3 for omega up to {hi}"), hi);
    }

    let ratio = (hi / lo).powf(1.0 / (MONOTONE_SAMPLES - 1) as f64);
    let mut previous = g_lo;
    for k in 1..MONOTONE_SAMPLES {
        let omega = if k + 1 == MONOTONE_SAMPLES { hi } else { lo * ratio.powi(k as i32) };
        let v = g(omega)?;
        evaluations += 1;
        if v < previous - MONOTONE_SLACK {
            return Err(Error::NotMonotone(format!(
                "best fidelity drops from {} to {} at omega = {omega}",
                previous + CLASSICAL_FIDELITY,
                v + CLASSICAL_FIDELITY
            )));
        }
        previous = v;
    }

    let mut count = 0;
    let root = bisect(
        |omega| {
            count += 1;
            g(omega)
        },
        lo,
        hi,
        OMEGA_TOLERANCE,
    )?;
    let at_root = max_fidelity(evaluator, scenario, root.x)?;
    Ok(CriticalPointResult {
        omega_c: Some(root.x),
        search: SearchInfo { lo, hi, step: None, iterations: root.iterations, evaluations: evaluations + count + 1 },
        ..at_root
    })
}

const T0_BRACKET_DOUBLINGS: usize = 8;

fn t0_root(
    evaluator: &Evaluator,
    channel: ChannelKind,
    beta: EnvironmentKind,
    gamma: f64,
    omega_ref: f64,
) -> Result<(Option<f64>, SearchInfo)> {
    let h = |t0: f64| -> Result<f64> {
        let scenario = Scenario::new(channel, beta, gamma, t0)?;
        Ok(max_fidelity(evaluator, &scenario, omega_ref)?.f_max - CLASSICAL_FIDELITY)
    };
    let h0 = h(0.0)?;
    if h0 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "best fidelity at t0 = 0 is {}, not above 2/3",
            h0 + CLASSICAL_FIDELITY
        )));
    }
    let mut hi = 10.0 / gamma;
    let mut h_hi = h(hi)?;
    let mut evaluations = 2;
    for _ in 0..T0_BRACKET_DOUBLINGS {
        if h_hi < 0.0 {
            break;
        }
        hi *= 2.0;
        h_hi = h(hi)?;
        evaluations += 1;
    }
    if h_hi >= 0.0 {
        return Ok((None, SearchInfo { lo: 0.0, hi, step: None, iterations: 0, evaluations }));
    }
    let mut count = 0;
    let root = bisect(
        |t0| {
            count += 1;
            h(t0)
        },
        0.0,
        hi,
        T0_TOLERANCE,
    )?;
    Ok((
        Some(root.x),
        SearchInfo { lo: 0.0, hi, step: None, iterations: root.iterations, evaluations: evaluations + count },
    ))
}

/// Longest transmission time after which some recovery still beats 2/3,
/// taken at the reference rate `10^4 * gamma`. The root is recomputed at a
/// tenth of that rate and reported as `sensitivity`.
pub fn critical_t0(
    evaluator: &Evaluator,
    alpha: EnvironmentKind,
    beta: EnvironmentKind,
    gamma: f64,
) -> Result<CriticalPointResult> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be finite and > 0, got {gamma}")));
    }
    let channel = ChannelKind::Decohered(alpha);
    let omega_ref = OMEGA_REF_FACTOR * gamma;
    let (t0_c, search) = t0_root(evaluator, channel, beta, gamma, omega_ref)?;
    let (coarse, _) = t0_root(evaluator, channel, beta, gamma, omega_ref / 10.0)?;
    let at = Scenario::new(channel, beta, gamma, t0_c.unwrap_or(search.hi))?;
    let best = max_fidelity(evaluator, &at, omega_ref)?;
    Ok(CriticalPointResult {
        t0_c,
        search,
        sensitivity: Some(Sensitivity { omega_ref: omega_ref / 10.0, t0_c: coarse }),
        note: if t0_c.is_none() { Some(format!("no crossing of 2/3 for t0 up to {}", search.hi)) } else { None },
        ..best
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub rms_residual: f64,
    pub fit_window: (f64, f64),
}

impl FitResult {
    pub fn eval(&self, t0: f64) -> f64 {
        self.a * (self.b * t0).exp() + self.c * (self.d * t0).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleExponentialFit {
    pub a: f64,
    pub b: f64,
    pub rms_residual: f64,
}

pub const MIN_FIT_POINTS: usize = 8;
const FIT_RESTARTS: usize = 50;

fn validate_fit_data(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateData(format!("need at least {MIN_FIT_POINTS} points, got {}", points.len())));
    }
    if points.iter().any(|&(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::DegenerateData("non-finite point".into()));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    if xs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::DegenerateData("repeated t0".into()));
    }
    let y0 = points[0].1;
    if points.iter().all(|p| p.1 == y0) {
        return Err(Error::DegenerateData("constant data".into()));
    }
    Ok(())
}

fn rms<F: Fn(f64) -> f64>(points: &[(f64, f64)], model: F) -> f64 {
    (points.iter().map(|&(x, y)| (model(x) - y).powi(2)).sum::<f64>() / points.len() as f64).sqrt()
}

/// Ordinary least squares line through `(x, y)`; returns (intercept, slope).
fn line_fit(points: impl Iterator<Item = (f64, f64)> + Clone) -> Option<(f64, f64)> {
    let n = points.clone().count() as f64;
    if n < 2.0 {
        return None;
    }
    let mx = points.clone().map(|p| p.0).sum::<f64>() / n;
    let my = points.clone().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.clone().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

fn log_linear(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.iter().any(|p| p.1 <= 0.0) {
        return None;
    }
    let (la, b) = line_fit(points.iter().map(|&(x, y)| (x, y.ln())))?;
    Some((la.exp(), b))
}

fn initial_steps(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| if v.abs() > 1e-6 { 0.1 * v.abs() } else { 0.05 }).collect()
}

/// Nelder-Mead restarted from its own optimum until the simplex collapses
/// without further progress.
fn polish<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64]) -> (Vec<f64>, f64) {
    let cfg = NelderMeadConfig::default();
    let mut x = x0.to_vec();
    let mut value = f(&x);
    for _ in 0..FIT_RESTARTS {
        let r = nelder_mead(&f, &x, &initial_steps(&x), &cfg);
        let improved = r.value < value;
        if improved {
            x = r.x;
        }
        let stalled = !improved || value - r.value <= 1e-15 * value.max(1e-300);
        value = value.min(r.value);
        if stalled && r.converged {
            break;
        }
    }
    (x, value)
}

/// Best single exponential `a e^{b t0}`.
pub fn fit_single_exponential(points: &[(f64, f64)]) -> Result<SingleExponentialFit> {
    validate_fit_data(points)?;
    let seed = log_linear(points).unwrap_or_else(|| {
        let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
        (mean, 0.0)
    });
    let ssr = |p: &[f64]| points.iter().map(|&(x, y)| (p[0] * (p[1] * x).exp() - y).powi(2)).sum::<f64>();
    let (x, _) = polish(ssr, &[seed.0, seed.1]);
    let (a, b) = (x[0], x[1]);
    Ok(SingleExponentialFit { a, b, rms_residual: rms(points, |t| a * (b * t).exp()) })
}

/// Unweighted least-squares fit of `a e^{b t0} + c e^{d t0}` to `(t0, y)`
/// points, taking the best of five deterministic starting points.
pub fn fit_double_exponential(points: &[(f64, f64)]) -> Result<FitResult> {
    validate_fit_data(points)?;
    let single = fit_single_exponential(points)?;
    let (a0, b0) = (single.a, single.b);

    let mut sorted = points.to_vec();
    sorted.sort_by(|p, q| p.0.total_cmp(&q.0));
    let half = sorted.len() / 2;
    let early = log_linear(&sorted[..half]).unwrap_or((a0, b0));
    let tail: Vec<(f64, f64)> = sorted[half..].iter().map(|&(x, y)| (x, y - early.0 * (early.1 * x).exp())).collect();
    let late = log_linear(&tail).unwrap_or((0.01 * a0.abs().max(1e-3), 2.0 * b0.abs().max(0.1)));

    let seeds = [
        [a0, b0, 0.0, 2.0 * b0],
        [early.0, early.1, late.0, late.1],
        [0.9 * a0, 0.5 * b0, 0.1 * a0, 2.0 * b0 + 0.1],
        [a0, b0, 0.01 * a0, 4.0 * b0.abs().max(0.1)],
        [0.5 * a0, b0, 0.5 * a0, -b0],
    ];
    let ssr = |p: &[f64]| {
        points.iter().map(|&(x, y)| (p[0] * (p[1] * x).exp() + p[2] * (p[3] * x).exp() - y).powi(2)).sum::<f64>()
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for seed in seeds {
        if seed.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let (x, value) = polish(ssr, &seed);
        if best.as_ref().is_none_or(|b| value < b.1) {
            best = Some((x, value));
        }
    }
    let (x, _) = best.ok_or_else(|| Error::DegenerateData("no usable starting point".into()))?;
    let lo = sorted.first().map(|p| p.0).unwrap_or(0.0);
    let hi = sorted.last().map(|p| p.0).unwrap_or(0.0);
    let mut fit = FitResult { a: x[0], b: x[1], c: x[2], d: x[3], rms_residual: 0.0, fit_window: (lo, hi) };
    // Present the slower-growing term first.
    if fit.d < fit.b {
        fit = FitResult { a: fit.c, b: fit.d, c: fit.a, d: fit.b, ..fit };
    }
    fit.rms_residual = rms(points, |t| fit.eval(t));
    Ok(fit)
}

/// Evenly spaced values `lo..=hi`, written `lo:hi:n` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidParameter(format!("invalid range {lo}:{hi}")));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn values(&self) -> Vec<f64> {
        match self.n {
            0 => Vec::new(),
            1 => vec![self.lo],
            n => (0..n)
                .map(|i| if i + 1 == n { self.hi } else { self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64 })
                .collect(),
        }
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidParameter(format!("expected lo:hi:n, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        Grid::new(lo, hi, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Omega,
    T,
    T0,
    Gamma,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 4] = [SweepAxis::Omega, SweepAxis::T, SweepAxis::T0, SweepAxis::Gamma];

    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::Omega => "omega",
            SweepAxis::T => "t",
            SweepAxis::T0 => "t0",
            SweepAxis::Gamma => "gamma",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.label() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown sweep axis {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepQuantity {
    /// `t_c` and `F_max` at each point.
    CriticalTime,
    /// `F` at the fixed `(omega, t)`.
    Fidelity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub quantity: SweepQuantity,
    /// Fixed parameters; the swept one is overwritten per point.
    pub scenario: Scenario,
    pub omega: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SweepValue {
    Critical { t_c: f64, f_max: f64 },
    Fidelity { f: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub result: SweepValue,
}

/// Evaluates `spec` at every axis value. Points run concurrently; rows come
/// back sorted by axis value.
pub fn sweep(evaluator: &Evaluator, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.axis == SweepAxis::T && spec.quantity == SweepQuantity::CriticalTime {
        return Err(Error::InvalidParameter("critical time cannot be swept over t".into()));
    }
    if let Some(v) = spec.values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{} must be finite and >= 0, got {v}", spec.axis)));
    }
    let mut values = spec.values.clone();
    values.sort_by(f64::total_cmp);
    values
        .par_iter()
        .map(|&value| {
            let mut scenario = spec.scenario;
            let (mut omega, mut t) = (spec.omega, spec.t);
            match spec.axis {
                SweepAxis::Omega => omega = value,
                SweepAxis::T => t = value,
                SweepAxis::T0 => scenario.t0 = value,
                SweepAxis::Gamma => scenario.gamma = value,
            }
            let result = match spec.quantity {
                SweepQuantity::CriticalTime => {
                    let r = max_fidelity(evaluator, &scenario, omega)?;
                    SweepValue::Critical { t_c: r.t_c, f_max: r.f_max }
                }
                SweepQuantity::Fidelity => SweepValue::Fidelity { f: evaluator.fidelity(&scenario, omega, t)? },
            };
            Ok(SweepRow { value, result })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use EnvironmentKind::*;

    fn perfect(beta: EnvironmentKind, gamma: f64) -> Scenario {
        Scenario::new(ChannelKind::Perfect, beta, gamma, 0.0).unwrap()
    }

    #[test]
    fn decoherence_free_maximum_is_at_half_period() {
        for beta in EnvironmentKind::ALL {
            for omega in [0.5, 3.0, 40.0] {
                let r = max_fidelity(&Evaluator::Closed, &perfect(beta, 0.0), omega).unwrap();
                assert!((r.t_c - PI / omega).abs() < 1e-6, "{beta} {omega}: {}", r.t_c);
                assert!((r.f_max - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn decaying_function_peaks_on_left_edge() {
        let r = critical_time(|t| Ok((-t).exp()), 1.0, 0.1).unwrap();
        assert_eq!(r.boundary, Boundary::Left);
        assert_eq!(r.t_c, r.search.lo);
    }

    #[test]
    fn growing_function_peaks_on_right_edge() {
        let r = critical_time(Ok, 1.0, 0.1).unwrap();
        assert_eq!(r.boundary, Boundary::Right);
        assert_eq!(r.t_c, 200.0);
    }

    #[test]
    fn non_finite_evaluation_is_an_error() {
        let err = critical_time(|t| Ok(if t > 3.0 { f64::NAN } else { t }), 1.0, 0.1).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn window_covers_both_regimes() {
        assert_eq!(time_window(1.0, 0.1).0, 200.0);
        assert!((time_window(1000.0, 0.0).0 - 4.0 * PI / 1000.0).abs() < 1e-15);
        let (w, step) = time_window(5.0, 0.1);
        assert_eq!(w, 200.0);
        assert_eq!(step, PI / 100.0);
    }

    #[test]
    fn critical_omega_root_straddles_classical_limit() {
        let s = perfect(Dissipative, 0.1);
        let r = critical_omega(&Evaluator::Closed, &s).unwrap();
        let w = r.omega_c.unwrap();
        assert!((r.f_max - CLASSICAL_FIDELITY).abs() < 1e-6);
        let below = max_fidelity(&Evaluator::Closed, &s, w - 1e-3).unwrap().f_max;
        let above = max_fidelity(&Evaluator::Closed, &s, w + 1e-3).unwrap().f_max;
        assert!(below < CLASSICAL_FIDELITY && CLASSICAL_FIDELITY < above);
    }

    #[test]
    fn noisy_channel_past_threshold_has_no_root() {
        let s = Scenario::new(ChannelKind::Decohered(Noisy), Dissipative, 0.1, 6.0).unwrap();
        let r = critical_omega(&Evaluator::Closed, &s).unwrap();
        assert_eq!(r.omega_c, None);
        assert!(r.f_max < CLASSICAL_FIDELITY);
        assert!(r.note.is_some());
    }

    #[test]
    fn synthetic_double_exponential_round_trip() {
        let truth = FitResult { a: 0.1, b: 0.12, c: 0.003, d: 0.47, rms_residual: 0.0, fit_window: (0.0, 0.0) };
        let points: Vec<(f64, f64)> =
            (0..40).map(|i| 0.15 + 7.7 * i as f64 / 39.0).map(|t| (t, truth.eval(t))).collect();
        let fit = fit_double_exponential(&points).unwrap();
        assert!(fit.rms_residual <= 1e-6, "{fit:?}");
        assert_eq!(fit.fit_window, (points[0].0, points[39].0));
        let single = fit_single_exponential(&points).unwrap();
        assert!(fit.rms_residual <= single.rms_residual);
    }

    #[test]
    fn fit_rejects_bad_data() {
        let few: Vec<(f64, f64)> = (0..7).map(|i| (i as f64, i as f64)).collect();
        assert!(matches!(fit_double_exponential(&few), Err(Error::DegenerateData(_))));
        let flat: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.3)).collect();
        assert!(matches!(fit_double_exponential(&flat), Err(Error::DegenerateData(_))));
        let mut repeated: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, i as f64)).collect();
        repeated[3].0 = 2.0;
        assert!(matches!(fit_double_exponential(&repeated), Err(Error::DegenerateData(_))));
    }

    #[test]
    fn grid_parsing() {
        let g: Grid = "0.2:6:60".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 60);
        assert_eq!((v[0], v[59]), (0.2, 6.0));
        assert!("1:0:3".parse::<Grid>().is_err());
        assert!("1:2".parse::<Grid>().is_err());
        assert!("1:2:3:4".parse::<Grid>().is_err());
        assert_eq!("1:2:0".parse::<Grid>().unwrap().values(), Vec::<f64>::new());
        assert_eq!("1:2:1".parse::<Grid>().unwrap().values(), vec![1.0]);
    }

    fn omega_sweep(values: Vec<f64>) -> SweepSpec {
        SweepSpec {
            axis: SweepAxis::Omega,
            values,
            quantity: SweepQuantity::CriticalTime,
            scenario: perfect(Dissipative, 0.1),
            omega: 0.0,
            t: 0.0,
        }
    }

    #[test]
    fn omega_sweep_orders_critical_quantities() {
        let grid = Grid::new(0.2, 6.0, 30).unwrap();
        let rows = sweep(&Evaluator::Closed, &omega_sweep(grid.values())).unwrap();
        let pairs: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| match r.result {
                SweepValue::Critical { t_c, f_max } => (t_c, f_max),
                SweepValue::Fidelity { .. } => unreachable!(),
            })
            .collect();
        for w in pairs.windows(2) {
            assert!(w[1].0 < w[0].0, "t_c not decreasing: {w:?}");
            assert!(w[1].1 >= w[0].1, "F_max decreasing: {w:?}");
        }
    }

    #[test]
    fn empty_sweep_is_empty() {
        assert!(sweep(&Evaluator::Closed, &omega_sweep(Vec::new())).unwrap().is_empty());
    }

    #[test]
    fn sweep_rejects_invalid_axis_values() {
        assert!(sweep(&Evaluator::Closed, &omega_sweep(vec![1.0, -1.0])).is_err());
        let mut spec = omega_sweep(vec![1.0]);
        spec.axis = SweepAxis::T;
        assert!(sweep(&Evaluator::Closed, &spec).is_err());
    }

    #[test]
    fn sweep_rows_are_sorted() {
        let mut spec = omega_sweep(vec![3.0, 1.0, 2.0]);
        spec.quantity = SweepQuantity::Fidelity;
        spec.t = 1.0;
        let rows = sweep(&Evaluator::Closed, &spec).unwrap();
        assert_eq!(rows.iter().map(|r| r.value).collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
    }
}
