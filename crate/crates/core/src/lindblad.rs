//! Lindblad master equation
//!
//! ```text
//! drho/dt = -i[H, rho] + (gamma/2) sum_k (2 L_k rho L_k^+ - L_k^+ L_k rho - rho L_k^+ L_k)
//! ```
//!
//! integrated with the classical fourth-order Runge-Kutta scheme at a fixed
//! step. Because the generator is linear and time independent, one RK4 step
//! is the action of the degree-4 Taylor polynomial of `h * Liouvillian`; the
//! default propagation raises that one-step map to the N-th power by repeated
//! squaring, which yields the same iterates as stepping N times in O(log N)
//! work. Plain stepping is available through [`Propagation::Stepping`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{hermitian_eigenvalues_with, ComplexMatrix, DensityMatrix, C64, I, ZERO};
use crate::tolerance::Tolerances;

/// Steps per unit of the fastest rate when the caller fixes the step.
const STEPS_PER_RATE_EXPLICIT: f64 = 50.0;
/// Steps per unit of the fastest rate for the automatic step.
const STEPS_PER_RATE_AUTO: f64 = 2000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    hamiltonian: ComplexMatrix,
    collapse_ops: Vec<ComplexMatrix>,
    gamma: f64,
}

impl LindbladModel {
    pub fn new(hamiltonian: ComplexMatrix, collapse_ops: Vec<ComplexMatrix>, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must be finite and >= 0, got {gamma}")));
        }
        let dim = hamiltonian.dim();
        if let Some(op) = collapse_ops.iter().find(|op| op.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: op.dim() });
        }
        Ok(Self { hamiltonian, collapse_ops, gamma })
    }

    /// No dynamics at all: `H = 0` and no collapse operators.
    pub fn trivial(dim: usize) -> Result<Self> {
        Self::new(ComplexMatrix::zeros(dim)?, Vec::new(), 0.0)
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn collapse_ops(&self) -> &[ComplexMatrix] {
        &self.collapse_ops
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// `drho/dt` for a validated state.
    pub fn liouvillian_apply(&self, rho: &DensityMatrix) -> Result<ComplexMatrix> {
        self.rhs(rho.matrix())
    }

    /// `drho/dt` for any operator of matching dimension.
    pub fn rhs(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: rho.dim() });
        }
        Ok(self.rhs_unchecked(rho))
    }

    fn rhs_unchecked(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = self.hamiltonian.commutator(rho).expect("dims checked").scale(-I);
        if self.gamma == 0.0 {
            return out;
        }
        let half_gamma = 0.5 * self.gamma;
        for l in &self.collapse_ops {
            let ld = l.adjoint();
            let ldl = ld.mul_unchecked(l);
            let jump = l.mul_unchecked(rho).mul_unchecked(&ld).scale_real(2.0);
            let anti = &ldl.mul_unchecked(rho) + &rho.mul_unchecked(&ldl);
            out = &out + &(&jump - &anti).scale_real(half_gamma);
        }
        out
    }

    /// Fastest rate of the generator, used to pick the integration step.
    fn rate_scale(&self) -> f64 {
        let h = self.hamiltonian.norm_bound();
        let d = self.gamma
            * self.collapse_ops.iter().map(|l| l.adjoint().mul_unchecked(l).norm_bound()).sum::<f64>().max(1.0);
        h.max(d).max(self.gamma).max(1.0)
    }

    /// The Liouvillian as a `dim^2 x dim^2` matrix on row-major vectorized
    /// operators, assembled column by column from [`Self::rhs`].
    fn superoperator(&self) -> SuperOp {
        let d = self.dim();
        let n = d * d;
        let mut s = SuperOp::zeros(n);
        let mut basis = ComplexMatrix::zeros(d).expect("valid dim");
        for col in 0..n {
            basis.data_mut()[col] = C64::new(1.0, 0.0);
            let img = self.rhs_unchecked(&basis);
            for (row, v) in img.as_slice().iter().enumerate() {
                s.data[row * n + col] = *v;
            }
            basis.data_mut()[col] = ZERO;
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Propagation {
    /// One-step RK4 map raised to the N-th power by squaring.
    #[default]
    Squaring,
    /// N explicit RK4 steps.
    Stepping,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Explicit step; `None` selects the automatic step.
    pub step: Option<f64>,
    pub richardson_check: bool,
    pub propagation: Propagation,
    /// Each step is further split into this many substeps (>= 1); used to
    /// measure step-size sensitivity.
    pub substeps: u64,
    pub tolerances: Tolerances,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: None,
            richardson_check: false,
            propagation: Propagation::Squaring,
            substeps: 1,
            tolerances: Tolerances::DEFAULT,
        }
    }
}

impl IntegratorConfig {
    pub fn with_step(step: f64) -> Self {
        Self { step: Some(step), ..Self::default() }
    }

    pub fn checked() -> Self {
        Self { richardson_check: true, ..Self::default() }
    }

    /// Largest step allowed for `model`.
    pub fn max_step(&self, model: &LindbladModel) -> Result<f64> {
        let rate = model.rate_scale();
        match self.step {
            Some(h) if !(h > 0.0) || !h.is_finite() => {
                Err(Error::InvalidParameter(format!("integration step must be > 0, got {h}")))
            }
            Some(h) => Ok(h.min(1.0 / (STEPS_PER_RATE_EXPLICIT * rate))),
            None => Ok(1.0 / (STEPS_PER_RATE_AUTO * rate)),
        }
    }
}

/// Diagnostics of one integration, measured on the returned state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolveDiagnostics {
    pub steps: u64,
    pub step: f64,
    pub trace_drift: f64,
    pub hermiticity_drift: f64,
    pub min_eigenvalue: f64,
    /// Max entrywise change when the step is halved, if checked.
    pub richardson_delta: Option<f64>,
    pub retried: bool,
}

/// Integrates `model` from `rho0` for `duration`.
pub fn evolve(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<DensityMatrix> {
    evolve_with_diagnostics(model, rho0, duration, cfg).map(|(rho, _)| rho)
}

pub fn evolve_with_diagnostics(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<(DensityMatrix, EvolveDiagnostics)> {
    if rho0.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: rho0.dim() });
    }
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::InvalidParameter(format!("duration must be finite and >= 0, got {duration}")));
    }
    let h_max = cfg.max_step(model)?;
    if duration == 0.0 {
        let diag = EvolveDiagnostics {
            steps: 0,
            step: 0.0,
            trace_drift: 0.0,
            hermiticity_drift: 0.0,
            min_eigenvalue: hermitian_eigenvalues_with(rho0.matrix(), &cfg.tolerances)?[0],
            richardson_delta: None,
            retried: false,
        };
        return Ok((rho0.clone(), diag));
    }
    if cfg.substeps == 0 {
        return Err(Error::InvalidParameter("substeps must be >= 1".into()));
    }
    let steps = (duration / h_max).ceil().max(1.0) as u64 * cfg.substeps;
    let engine = Engine::new(model, cfg.propagation);
    match attempt(&engine, rho0, duration, steps, cfg) {
        Ok(ok) => Ok(ok),
        Err(_) => {
            let (rho, mut diag) = attempt(&engine, rho0, duration, steps * 4, cfg)?;
            diag.retried = true;
            Ok((rho, diag))
        }
    }
}

fn attempt(
    engine: &Engine,
    rho0: &DensityMatrix,
    duration: f64,
    steps: u64,
    cfg: &IntegratorConfig,
) -> Result<(DensityMatrix, EvolveDiagnostics)> {
    let tol = &cfg.tolerances;
    let h = duration / steps as f64;
    let rho = engine.run(rho0.matrix(), h, steps);
    if !rho.is_finite() {
        return Err(Error::Integrator("non-finite state".into()));
    }
    let trace_drift = (rho.trace() - rho0.matrix().trace()).norm();
    let hermiticity_drift = rho.hermiticity_error();
    if trace_drift > tol.trace {
        return Err(Error::Integrator(format!("trace drift {trace_drift:e}")));
    }
    if hermiticity_drift > tol.hermiticity {
        return Err(Error::Integrator(format!("hermiticity drift {hermiticity_drift:e}")));
    }
    let min_eigenvalue = hermitian_eigenvalues_with(&rho, tol)?[0];
    if min_eigenvalue < -tol.evolve_min_eigenvalue {
        return Err(Error::Integrator(format!("negative eigenvalue {min_eigenvalue:e}")));
    }
    let richardson_delta = if cfg.richardson_check {
        let fine = engine.run(rho0.matrix(), h / 2.0, steps * 2);
        let delta = fine.max_abs_diff(&rho);
        if delta > tol.richardson {
            return Err(Error::Integrator(format!("half-step disagreement {delta:e}")));
        }
        Some(delta)
    } else {
        None
    };
    let diag = EvolveDiagnostics {
        steps,
        step: h,
        trace_drift,
        hermiticity_drift,
        min_eigenvalue,
        richardson_delta,
        retried: false,
    };
    Ok((DensityMatrix::new_unchecked(rho), diag))
}

enum Engine<'a> {
    Squaring(SuperOp),
    Stepping(&'a LindbladModel),
}

impl<'a> Engine<'a> {
    fn new(model: &'a LindbladModel, propagation: Propagation) -> Self {
        match propagation {
            Propagation::Squaring => Engine::Squaring(model.superoperator()),
            Propagation::Stepping => Engine::Stepping(model),
        }
    }

    fn run(&self, rho0: &ComplexMatrix, h: f64, steps: u64) -> ComplexMatrix {
        match self {
            Engine::Stepping(model) => {
                let mut rho = rho0.clone();
                for _ in 0..steps {
                    rho = rk4_step(model, &rho, h);
                }
                rho
            }
            Engine::Squaring(liou) => {
                let inc = liou.rk4_increment(h).power(steps);
                let v = inc.apply(rho0.as_slice());
                let mut rho = rho0.clone();
                for (r, dv) in rho.data_mut().iter_mut().zip(v) {
                    *r += dv;
                }
                rho
            }
        }
    }
}

/// One classical RK4 step.
pub fn rk4_step(model: &LindbladModel, rho: &ComplexMatrix, h: f64) -> ComplexMatrix {
    let k1 = model.rhs_unchecked(rho);
    let k2 = model.rhs_unchecked(&(rho + &k1.scale_real(h / 2.0)));
    let k3 = model.rhs_unchecked(&(rho + &k2.scale_real(h / 2.0)));
    let k4 = model.rhs_unchecked(&(rho + &k3.scale_real(h)));
    let sum = &(&k1 + &k2.scale_real(2.0)) + &(&k3.scale_real(2.0) + &k4);
    rho + &sum.scale_real(h / 6.0)
}

/// Dense square matrix on vectorized operators. When used as a propagator
/// it stores `P - 1` so that maps close to the identity keep full precision.
#[derive(Clone)]
struct SuperOp {
    n: usize,
    data: Vec<C64>,
}

impl SuperOp {
    fn zeros(n: usize) -> Self {
        Self { n, data: vec![ZERO; n * n] }
    }

    fn matmul(&self, rhs: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    fn add_scaled(&mut self, rhs: &Self, k: f64) {
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b * k;
        }
    }

    /// `P - 1` for `P = 1 + hL + (hL)^2/2 + (hL)^3/6 + (hL)^4/24`.
    fn rk4_increment(&self, h: f64) -> Self {
        let mut hl = self.clone();
        hl.data.iter_mut().for_each(|x| *x *= h);
        // Horner: hL (1 + hL/2 (1 + hL/3 (1 + hL/4)))
        let mut acc = hl.clone();
        acc.data.iter_mut().for_each(|x| *x *= 0.25);
        for k in [3.0, 2.0] {
            let mut next = acc.clone();
            for i in 0..self.n {
                next.data[i * self.n + i] += 1.0;
            }
            acc = hl.matmul(&next);
            acc.data.iter_mut().for_each(|x| *x /= k);
        }
        let mut next = acc;
        for i in 0..self.n {
            next.data[i * self.n + i] += 1.0;
        }
        hl.matmul(&next)
    }

    /// `(1 + a)(1 + b) - 1`
    fn compose(&self, rhs: &Self) -> Self {
        let mut out = self.matmul(rhs);
        out.add_scaled(self, 1.0);
        out.add_scaled(rhs, 1.0);
        out
    }

    fn power(&self, mut steps: u64) -> Self {
        let mut result = Self::zeros(self.n);
        let mut base = self.clone();
        while steps > 0 {
            if steps & 1 == 1 {
                result = result.compose(&base);
            }
            steps >>= 1;
            if steps > 0 {
                base = base.compose(&base);
            }
        }
        result
    }

    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let n = self.n;
        (0..n).map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{pauli, sigma_minus, sigma_plus, ONE};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn coherent_state() -> DensityMatrix {
        // (|0> + |1>)/sqrt(2) partially dephased
        let m = ComplexMatrix::from_row_major(vec![c(0.6), C64::new(0.3, 0.2), C64::new(0.3, -0.2), c(0.4)]).unwrap();
        DensityMatrix::new(m).unwrap()
    }

    #[test]
    fn free_model_has_zero_derivative() {
        let model = LindbladModel::trivial(2).unwrap();
        let d = model.liouvillian_apply(&coherent_state()).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn dephasing_derivative_of_coherence() {
        let gamma = 0.3;
        let model =
            LindbladModel::new(ComplexMatrix::zeros(2).unwrap(), vec![&sigma_plus() * &sigma_minus()], gamma).unwrap();
        let rho = coherent_state();
        let d = model.liouvillian_apply(&rho).unwrap();
        assert!((d[(0, 1)] - rho[(0, 1)] * (-gamma / 2.0)).norm() < 1e-15);
        assert!(d[(0, 0)].norm() < 1e-15 && d[(1, 1)].norm() < 1e-15);
    }

    #[test]
    fn damping_derivative_of_ground_population() {
        let gamma = 0.7;
        let model = LindbladModel::new(ComplexMatrix::zeros(2).unwrap(), vec![sigma_minus()], gamma).unwrap();
        let rho = DensityMatrix::pure(&[ONE, ZERO]).unwrap();
        let d = model.liouvillian_apply(&rho).unwrap();
        assert!((d[(0, 0)] - c(-gamma)).norm() < 1e-15);
        assert!((d[(1, 1)] - c(gamma)).norm() < 1e-15);
    }

    #[test]
    fn derivative_is_traceless_and_hermitian() {
        let h = pauli(2).unwrap().scale_real(-0.8);
        let model = LindbladModel::new(h, vec![sigma_minus(), sigma_plus()], 0.4).unwrap();
        let d = model.liouvillian_apply(&coherent_state()).unwrap();
        assert!(d.trace().norm() < 1e-12);
        assert!(d.hermiticity_error() < 1e-12);
    }

    #[test]
    fn rejects_bad_models() {
        let h = ComplexMatrix::zeros(2).unwrap();
        assert!(LindbladModel::new(h.clone(), vec![], -0.1).is_err());
        assert!(LindbladModel::new(h.clone(), vec![], f64::NAN).is_err());
        assert!(LindbladModel::new(h, vec![ComplexMatrix::zeros(4).unwrap()], 0.1).is_err());
        let model = LindbladModel::trivial(4).unwrap();
        assert!(model.liouvillian_apply(&coherent_state()).is_err());
    }

    #[test]
    fn zero_duration_is_identity() {
        let model = LindbladModel::new(pauli(1).unwrap(), vec![sigma_minus()], 1.0).unwrap();
        let rho = coherent_state();
        let out = evolve(&model, &rho, 0.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn negative_duration_and_step_rejected() {
        let model = LindbladModel::trivial(2).unwrap();
        assert!(evolve(&model, &coherent_state(), -1.0, &IntegratorConfig::default()).is_err());
        assert!(evolve(&model, &coherent_state(), 1.0, &IntegratorConfig::with_step(0.0)).is_err());
    }

    #[test]
    fn dephasing_decay_matches_exponential() {
        let gamma = 0.2;
        let model =
            LindbladModel::new(ComplexMatrix::zeros(2).unwrap(), vec![&sigma_plus() * &sigma_minus()], gamma).unwrap();
        let rho = coherent_state();
        for t in [0.5, 3.0, 17.0] {
            let out = evolve(&model, &rho, t, &IntegratorConfig::checked()).unwrap();
            let want = rho[(0, 1)].norm() * (-gamma * t / 2.0).exp();
            assert!((out[(0, 1)].norm() - want).abs() < 1e-8);
        }
    }

    #[test]
    fn amplitude_damping_matches_exponential() {
        let gamma = 0.15;
        let model = LindbladModel::new(ComplexMatrix::zeros(2).unwrap(), vec![sigma_minus()], gamma).unwrap();
        let rho = coherent_state();
        for t in [1.0, 10.0, 40.0] {
            let out = evolve(&model, &rho, t, &IntegratorConfig::checked()).unwrap();
            assert!((out[(0, 0)].re - 0.6 * (-gamma * t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn squaring_matches_explicit_stepping() {
        let h = pauli(1).unwrap().scale_real(-1.5);
        let model = LindbladModel::new(h, vec![sigma_minus(), sigma_plus()], 0.3).unwrap();
        let rho = coherent_state();
        let step = IntegratorConfig { step: Some(0.01), ..IntegratorConfig::default() };
        let stepped = IntegratorConfig { propagation: Propagation::Stepping, ..step };
        let a = evolve(&model, &rho, 2.37, &step).unwrap();
        let b = evolve(&model, &rho, 2.37, &stepped).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-13);
    }

    #[test]
    fn rabi_rotation_exact() {
        // H = -w sigma_x / 2 rotates |0> to |1> after t = pi / w.
        let w = 3.0;
        let model = LindbladModel::new(pauli(1).unwrap().scale_real(-w / 2.0), vec![], 0.0).unwrap();
        let rho = DensityMatrix::pure(&[ONE, ZERO]).unwrap();
        let out = evolve(&model, &rho, std::f64::consts::PI / w, &IntegratorConfig::checked()).unwrap();
        assert!((out[(1, 1)].re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn diagnostics_are_reported() {
        let model = LindbladModel::new(pauli(3).unwrap(), vec![sigma_minus()], 0.5).unwrap();
        let (_, d) = evolve_with_diagnostics(&model, &coherent_state(), 4.0, &IntegratorConfig::checked()).unwrap();
        assert!(d.steps > 0 && d.step > 0.0);
        assert!(d.trace_drift <= 1e-9 && d.hermiticity_drift <= 1e-9);
        assert!(d.richardson_delta.unwrap() <= 1e-8);
        assert!(!d.retried);
    }
}
