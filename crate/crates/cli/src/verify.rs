//! Self-check suite behind `teleport verify`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use teleport_core::analysis::{
    critical_omega, critical_t0, fit_double_exponential, fit_single_exponential, max_fidelity, sweep, Evaluator,
    FitResult, Grid, Scenario, SweepAxis, SweepQuantity, SweepSpec, SweepValue, CLASSICAL_FIDELITY,
};
use teleport_core::closedform::{f_channel, f_perfect, fidelity};
use teleport_core::environment::{
    channel_state_closed, channel_state_numeric, concurrence, esd_time, generators, ChannelKind, EnvironmentKind,
};
use teleport_core::error::Result;
use teleport_core::lindblad::{evolve, evolve_with_diagnostics, IntegratorConfig, LindbladModel};
use teleport_core::qmat::{hermitian_eigenvalues, kron, partial_trace, pauli, ComplexMatrix, DensityMatrix, C64};
use teleport_core::sphere::Quadrature;
use teleport_core::teleport::{average_fidelity, RecoveryConfig};
use teleport_core::tolerance::Tolerances;

use EnvironmentKind::{Dephasing, Dissipative, Noisy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VerifyOptions {
    pub quick: bool,
    /// Doubles gamma on the simulated side of the two-path check.
    pub inject_fault: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub module: &'static str,
    pub description: &'static str,
    /// Worst deviation observed; compared against `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    pub cases: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Traceability {
    pub module: &'static str,
    pub checks: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub passed: bool,
    pub mode: &'static str,
    pub fault_injected: bool,
    pub checks: Vec<Check>,
    pub traceability: Vec<Traceability>,
}

const MODULES: [&str; 6] = ["qmat", "lindblad", "environment", "teleport", "closedform", "analysis"];

struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn record(
        &mut self,
        id: &'static str,
        module: &'static str,
        description: &'static str,
        tolerance: f64,
        run: impl FnOnce() -> Result<(f64, usize)>,
    ) {
        let (measured, cases, passed) = match run() {
            Ok((m, n)) => (m, n, m <= tolerance),
            Err(_) => (f64::INFINITY, 0, false),
        };
        self.checks.push(Check { id, module, description, measured, tolerance, cases, passed });
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, dim: usize) -> ComplexMatrix {
    let entries = (0..dim * dim).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    ComplexMatrix::from_row_major(entries).expect("supported dimension")
}

fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> Result<DensityMatrix> {
    let a = random_matrix(rng, dim);
    let m = a.try_mul(&a.adjoint())?;
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / tr))
}

struct Grids {
    gammas: Vec<f64>,
    omegas: Vec<f64>,
    times: Vec<f64>,
    t0s: Vec<f64>,
}

impl Grids {
    fn new(quick: bool) -> Self {
        if quick {
            Self { gammas: vec![0.1], omegas: vec![0.1, 5.0], times: vec![1.0, 20.0], t0s: vec![0.0, 2.0] }
        } else {
            Self {
                gammas: vec![0.05, 0.1, 0.2],
                omegas: vec![0.02, 0.1, 1.0, 5.0, 50.0],
                times: vec![0.1, 1.0, 5.0, 20.0],
                t0s: vec![0.0, 0.5, 2.0],
            }
        }
    }
}

pub fn run(opts: VerifyOptions) -> VerifySummary {
    let tol = Tolerances::DEFAULT;
    let grids = Grids::new(opts.quick);
    let cfg = IntegratorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let random_cases = if opts.quick { 10 } else { 50 };
    let mut s = Suite { checks: Vec::new() };

    s.record("kron_mixed_product", "qmat", "kron(a,b) kron(c,d) = kron(ac,bd)", 1e-12, || {
        let mut worst: f64 = 0.0;
        for _ in 0..random_cases {
            let [a, b, c, d] = [0; 4].map(|_| random_matrix(&mut rng, 2));
            let lhs = kron(&a, &b)?.try_mul(&kron(&c, &d)?)?;
            let rhs = kron(&a.try_mul(&c)?, &b.try_mul(&d)?)?;
            worst = worst.max(lhs.max_abs_diff(&rhs));
        }
        Ok((worst, random_cases))
    });
    s.record("partial_trace_trace", "qmat", "partial trace preserves the trace", 1e-12, || {
        let mut worst: f64 = 0.0;
        for _ in 0..random_cases {
            let rho = random_density(&mut rng, 8)?;
            for keep in [vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]] {
                worst = worst.max((partial_trace(rho.matrix(), &keep)?.trace() - rho.matrix().trace()).norm());
            }
        }
        Ok((worst, random_cases * 6))
    });
    s.record("eigenvalue_sum", "qmat", "Hermitian eigenvalues sum to the trace", 1e-10, || {
        let mut worst: f64 = 0.0;
        for _ in 0..random_cases {
            let a = random_matrix(&mut rng, 4);
            let h = a.try_add(&a.adjoint())?;
            let ev = hermitian_eigenvalues(&h)?;
            worst = worst.max((ev.iter().sum::<f64>() - h.trace().re).abs());
        }
        Ok((worst, random_cases))
    });
    s.record("adjoint_involution", "qmat", "adjoint of adjoint is the identity map", 0.0, || {
        let mut worst: f64 = 0.0;
        for _ in 0..random_cases {
            let a = random_matrix(&mut rng, 4);
            worst = worst.max(a.adjoint().adjoint().max_abs_diff(&a));
        }
        Ok((worst, random_cases))
    });

    s.record("trace_preservation", "lindblad", "trace kept for durations up to 10/gamma", tol.trace, || {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for kind in EnvironmentKind::ALL {
            for gamma in [0.05, 0.5] {
                let model = LindbladModel::new(ComplexMatrix::zeros(4)?, generators(kind, 2)?, gamma)?;
                let rho = random_density(&mut rng, 4)?;
                for frac in [0.1, 0.5, 1.0] {
                    let out = evolve(&model, &rho, frac * 10.0 / gamma, &cfg)?;
                    worst = worst.max((out.matrix().trace().re - 1.0).abs());
                    n += 1;
                }
            }
        }
        Ok((worst, n))
    });
    let mut random_drift = Ok((0.0f64, 0.0f64));
    for i in 0..random_cases {
        let step = (|| -> Result<(f64, f64)> {
            let h = kron(&pauli(1)?, &pauli(3)?)?.scale_real(0.3);
            let model = LindbladModel::new(h, generators(EnvironmentKind::ALL[i % 3], 2)?, 0.2)?;
            let rho = random_density(&mut rng, 4)?;
            let (_, d) = evolve_with_diagnostics(&model, &rho, rng.gen_range(0.0..20.0), &cfg)?;
            Ok((d.hermiticity_drift, (-d.min_eigenvalue).max(0.0)))
        })();
        random_drift = match (random_drift, step) {
            (Ok(acc), Ok(d)) => Ok((acc.0.max(d.0), acc.1.max(d.1))),
            (Err(e), _) | (_, Err(e)) => Err(e),
        };
    }
    let drift = random_drift.clone();
    s.record("hermiticity_random", "lindblad", "Hermiticity kept from random initial states", tol.hermiticity, || {
        drift.map(|d| (d.0, random_cases))
    });
    s.record(
        "positivity_random",
        "lindblad",
        "negative eigenvalue depth from random initial states",
        tol.evolve_min_eigenvalue,
        || random_drift.map(|d| (d.1, random_cases)),
    );
    s.record("composition", "lindblad", "evolve(t1+t2) = evolve(t2) after evolve(t1)", 1e-8, || {
        let mut worst: f64 = 0.0;
        for i in 0..random_cases {
            let model =
                LindbladModel::new(pauli(1)?.scale_real(0.7), generators(EnvironmentKind::ALL[i % 3], 1)?, 0.3)?;
            let rho = random_density(&mut rng, 2)?;
            let (t1, t2) = (rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0));
            let once = evolve(&model, &rho, t1 + t2, &cfg)?;
            let twice = evolve(&model, &evolve(&model, &rho, t1, &cfg)?, t2, &cfg)?;
            worst = worst.max(once.matrix().max_abs_diff(twice.matrix()));
        }
        Ok((worst, random_cases))
    });
    s.record(
        "free_evolution_identity",
        "lindblad",
        "no Hamiltonian and no jumps leaves the state fixed",
        1e-15,
        || {
            let rho = random_density(&mut rng, 4)?;
            let out = evolve(&LindbladModel::trivial(4)?, &rho, 7.0, &cfg)?;
            Ok((out.matrix().max_abs_diff(rho.matrix()), 1))
        },
    );

    s.record("channel_state", "environment", "integrated channel states match closed forms", tol.channel_state, || {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for kind in ChannelKind::ALL {
            for &gamma in &grids.gammas {
                for &t0 in &grids.t0s {
                    let closed = channel_state_closed(kind, gamma, t0)?;
                    let numeric = channel_state_numeric(kind, gamma, t0, &cfg)?;
                    worst = worst.max(closed.rho().matrix().max_abs_diff(numeric.rho().matrix()));
                    n += 1;
                }
            }
        }
        Ok((worst, n))
    });
    s.record("concurrence", "environment", "concurrence formulas for the three channels", 1e-12, || {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for gamma in [0.05, 0.1, 1.0] {
            for t0 in [0.0, 0.3, 0.44, 1.0, 4.0] {
                let x: f64 = gamma * t0;
                for (kind, c) in [
                    (Dissipative, (-2.0 * x).exp()),
                    (Noisy, ((-2.0 * x).exp() + (-4.0 * x).exp() / 2.0 - 0.5).max(0.0)),
                    (Dephasing, (-x).exp()),
                ] {
                    worst = worst.max((concurrence(&channel_state_closed(kind.into(), gamma, t0)?)? - c).abs());
                    n += 1;
                }
            }
        }
        Ok((worst, n))
    });
    s.record("sudden_death", "environment", "noisy-channel sudden death at ln(1+sqrt 2)/(2 gamma)", 1e-6, || {
        let mut worst: f64 = 0.0;
        for gamma in [0.1, 1.0] {
            let t = esd_time(Noisy, gamma)?.unwrap_or(f64::INFINITY);
            worst = worst.max((t - (1.0 + 2f64.sqrt()).ln() / (2.0 * gamma)).abs());
        }
        Ok((worst, 2))
    });

    s.record("zero_duration", "teleport", "F = 1/2 without recovery, all channel/recovery pairs", 1e-9, || {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for channel in ChannelKind::ALL {
            let state = channel_state_numeric(channel, 0.1, 2.0, &cfg)?;
            for beta in EnvironmentKind::ALL {
                let rec = RecoveryConfig::new(beta, 0.1, 1.0, 0.0)?;
                let f = average_fidelity(&state, &rec, Quadrature::Octahedral6, &cfg)?.fidelity;
                worst = worst.max((f - 0.5).abs());
                n += 1;
            }
        }
        Ok((worst, n))
    });
    s.record("ideal_protocol", "teleport", "F = 1 for a perfect channel and ideal recovery", 1e-8, || {
        let mut worst: f64 = 0.0;
        for beta in EnvironmentKind::ALL {
            let rec = RecoveryConfig::new(beta, 0.0, 1.0, PI)?;
            let f = average_fidelity(
                &channel_state_closed(ChannelKind::Perfect, 0.0, 0.0)?,
                &rec,
                Quadrature::Octahedral6,
                &cfg,
            )?
            .fidelity;
            worst = worst.max((f - 1.0).abs());
        }
        Ok((worst, 3))
    });
    s.record("entangled_fraction", "teleport", "ideal recovery gives (2 F_e + 1)/3", 1e-6, || {
        let mut worst: f64 = 0.0;
        for alpha in EnvironmentKind::ALL {
            let state = channel_state_numeric(alpha.into(), 0.1, 2.0, &cfg)?;
            let rec = RecoveryConfig::new(Dissipative, 0.0, 1.0, PI)?;
            let f = average_fidelity(&state, &rec, Quadrature::Octahedral6, &cfg)?.fidelity;
            worst = worst.max((f - (2.0 * state.bell_overlap() + 1.0) / 3.0).abs());
        }
        Ok((worst, 3))
    });
    let dense_cases = if opts.quick { 3 } else { 50 };
    s.record("quadrature", "teleport", "six-point rule equals dense 64x128 quadrature", tol.quadrature, || {
        let mut worst: f64 = 0.0;
        for i in 0..dense_cases {
            let channel = ChannelKind::ALL[i % 4];
            let beta = EnvironmentKind::ALL[i % 3];
            let gamma = rng.gen_range(0.01..0.5);
            let state = channel_state_numeric(channel, gamma, rng.gen_range(0.0..3.0), &cfg)?;
            let rec = RecoveryConfig::new(beta, gamma, rng.gen_range(0.01..10.0), rng.gen_range(0.0..10.0))?;
            let six = average_fidelity(&state, &rec, Quadrature::Octahedral6, &cfg)?.fidelity;
            let dense = average_fidelity(&state, &rec, Quadrature::Dense { n_theta: 64, n_phi: 128 }, &cfg)?.fidelity;
            worst = worst.max((six - dense).abs());
        }
        Ok((worst, dense_cases))
    });

    let mut hygiene = (0.0f64, 0.0f64, 0.0f64);
    s.record("two_path", "closedform", "closed forms equal simulated fidelities", tol.two_path, || {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for channel in ChannelKind::ALL {
            for &gamma in &grids.gammas {
                let sim_gamma = if opts.inject_fault { 2.0 * gamma } else { gamma };
                for &t0 in &grids.t0s {
                    let state = channel_state_numeric(channel, sim_gamma, t0, &cfg)?;
                    for beta in EnvironmentKind::ALL {
                        for &omega in &grids.omegas {
                            for &t in &grids.times {
                                let rec = RecoveryConfig::new(beta, sim_gamma, omega, t)?;
                                let report = average_fidelity(&state, &rec, Quadrature::Octahedral6, &cfg)?;
                                let closed = fidelity(channel, beta, gamma, omega, t, t0)?;
                                worst = worst.max((report.fidelity - closed).abs());
                                hygiene.0 = hygiene.0.max(report.worst_trace_drift);
                                hygiene.1 = hygiene.1.max(report.worst_hermiticity_drift);
                                hygiene.2 = hygiene.2.min(report.min_eigenvalue);
                                n += 1;
                            }
                        }
                    }
                }
            }
        }
        Ok((worst, n))
    });
    s.record("integrator_trace", "lindblad", "trace drift over all two-path evolutions", tol.trace, || {
        Ok((hygiene.0, 1))
    });
    s.record(
        "integrator_hermiticity",
        "lindblad",
        "Hermiticity drift over all two-path evolutions",
        tol.hermiticity,
        || Ok((hygiene.1, 1)),
    );
    s.record(
        "integrator_positivity",
        "lindblad",
        "negative eigenvalue depth over two-path evolutions",
        tol.evolve_min_eigenvalue,
        || Ok(((-hygiene.2).max(0.0), 1)),
    );
    s.record("step_halving", "lindblad", "halving the step changes F by at most 1e-8", 1e-8, || {
        let halved = IntegratorConfig { substeps: 2, ..cfg };
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for channel in ChannelKind::ALL {
            for beta in EnvironmentKind::ALL {
                for (omega, t) in [(5.0, 20.0), (50.0, 5.0), (0.1, 1.0)] {
                    let rec = RecoveryConfig::new(beta, 0.1, omega, t)?;
                    let a = average_fidelity(
                        &channel_state_numeric(channel, 0.1, 2.0, &cfg)?,
                        &rec,
                        Quadrature::Octahedral6,
                        &cfg,
                    )?;
                    let b = average_fidelity(
                        &channel_state_numeric(channel, 0.1, 2.0, &halved)?,
                        &rec,
                        Quadrature::Octahedral6,
                        &halved,
                    )?;
                    worst = worst.max((a.fidelity - b.fidelity).abs());
                    n += 1;
                }
            }
        }
        Ok((worst, n))
    });
    s.record(
        "zero_transmission",
        "closedform",
        "channel formulas reduce to the perfect channel at t0 = 0",
        1e-12,
        || {
            let mut worst: f64 = 0.0;
            let mut n = 0;
            for alpha in EnvironmentKind::ALL {
                for beta in EnvironmentKind::ALL {
                    for &omega in &grids.omegas {
                        for &t in &grids.times {
                            let a = f_channel(alpha, beta, 0.1, omega, t, 0.0)?;
                            worst = worst.max((a - f_perfect(beta, 0.1, omega, t)?).abs());
                            n += 1;
                        }
                    }
                }
            }
            Ok((worst, n))
        },
    );
    s.record("branch_continuity", "closedform", "continuity across gamma = 4 omega and gamma = 2 omega", 1e-5, || {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        let gamma = 0.4;
        for omega in [gamma / 4.0, gamma / 2.0] {
            for channel in ChannelKind::ALL {
                for beta in EnvironmentKind::ALL {
                    for t in [0.5, 3.0, 12.0] {
                        let at = fidelity(channel, beta, gamma, omega, t, 1.0)?;
                        for side in [omega - 1e-7, omega + 1e-7] {
                            worst = worst.max((at - fidelity(channel, beta, gamma, side, t, 1.0)?).abs());
                            n += 1;
                        }
                    }
                }
            }
        }
        Ok((worst, n))
    });
    s.record("boundedness", "closedform", "0 <= F <= 1 on the grid", 0.0, || {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for channel in ChannelKind::ALL {
            for beta in EnvironmentKind::ALL {
                for &gamma in &grids.gammas {
                    for &omega in &grids.omegas {
                        for &t in &grids.times {
                            for &t0 in &grids.t0s {
                                let f = fidelity(channel, beta, gamma, omega, t, t0)?;
                                worst = worst.max(-f).max(f - 1.0);
                                n += 1;
                            }
                        }
                    }
                }
            }
        }
        Ok((worst.max(0.0), n))
    });
    s.record("transmission_monotone", "closedform", "F non-increasing in t0 wherever F(t0=0) > 2/3", 1e-12, || {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for alpha in EnvironmentKind::ALL {
            for beta in EnvironmentKind::ALL {
                for &gamma in &grids.gammas {
                    for &omega in &grids.omegas {
                        for &t in &grids.times {
                            let f: Vec<f64> = [0.0, 0.5, 2.0]
                                .iter()
                                .map(|&t0| f_channel(alpha, beta, gamma, omega, t, t0))
                                .collect::<Result<_>>()?;
                            if f[0] > CLASSICAL_FIDELITY {
                                worst = worst.max(f[1] - f[0]).max(f[2] - f[1]);
                                n += 1;
                            }
                        }
                    }
                }
            }
        }
        Ok((worst.max(0.0), n))
    });

    let ev = Evaluator::Closed;
    s.record("critical_time_two_path", "analysis", "max(|dt_c|/10, |dF_max|) between evaluators", 1e-6, || {
        let sc = Scenario::new(ChannelKind::Perfect, Dissipative, 0.1, 0.0)?;
        let a = max_fidelity(&ev, &sc, 5.0)?;
        let b = max_fidelity(&Evaluator::numeric(), &sc, 5.0)?;
        Ok((((a.t_c - b.t_c).abs() / 10.0).max((a.f_max - b.f_max).abs()), 1))
    });
    s.record("critical_time_local_max", "analysis", "every t_c is a local maximum", 0.0, || {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for channel in ChannelKind::ALL {
            for beta in EnvironmentKind::ALL {
                for omega in [0.5, 5.0] {
                    let sc = Scenario::new(channel, beta, 0.1, 2.0)?;
                    let r = max_fidelity(&ev, &sc, omega)?;
                    for dt in [-1e-3, -1e-5, 1e-5, 1e-3] {
                        worst = worst.max(ev.fidelity(&sc, omega, r.t_c + dt)? - r.f_max);
                    }
                    n += 1;
                }
            }
        }
        Ok((worst.max(0.0), n))
    });
    s.record("ordering", "analysis", "F_max ordered by recovery kind and by channel", 0.0, || {
        let mut worst: f64 = 0.0;
        let fmax = |c: ChannelKind, b: EnvironmentKind, w: f64| -> Result<f64> {
            Ok(max_fidelity(&ev, &Scenario::new(c, b, 0.1, 2.0)?, w)?.f_max)
        };
        let omegas: &[f64] = if opts.quick { &[1.0] } else { &[0.5, 1.0, 5.0] };
        for &w in omegas {
            for c in ChannelKind::ALL {
                let (di, no, de) = (fmax(c, Dissipative, w)?, fmax(c, Noisy, w)?, fmax(c, Dephasing, w)?);
                worst = worst.max(di - de).max(no - di);
            }
            for b in EnvironmentKind::ALL {
                let p = fmax(ChannelKind::Perfect, b, w)?;
                let [di, no, de] = [Dissipative, Noisy, Dephasing].map(|a| fmax(a.into(), b, w));
                let (di, no, de) = (di?, no?, de?);
                worst = worst.max(de - p).max(di - de).max(no - di);
            }
        }
        Ok((worst.max(0.0), omegas.len() * 7))
    });
    s.record("omega_c_straddle", "analysis", "F_max(omega_c -+ 1e-3) straddles 2/3", 0.0, || {
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for channel in ChannelKind::ALL {
            for beta in EnvironmentKind::ALL {
                let sc = Scenario::new(channel, beta, 0.1, 2.0)?;
                let Some(w) = critical_omega(&ev, &sc)?.omega_c else {
                    worst = f64::INFINITY;
                    continue;
                };
                let below = max_fidelity(&ev, &sc, w - 1e-3)?.f_max - CLASSICAL_FIDELITY;
                let above = max_fidelity(&ev, &sc, w + 1e-3)?.f_max - CLASSICAL_FIDELITY;
                worst = worst.max(below.max(0.0)).max((-above).max(0.0));
                n += 1;
            }
        }
        Ok((worst, n))
    });
    s.record("omega_c_absent", "analysis", "no omega_c for the noisy channel well past t0_c", 0.0, || {
        let r = critical_omega(&ev, &Scenario::new(Noisy.into(), Dissipative, 0.1, 6.0)?)?;
        Ok((if r.omega_c.is_none() { 0.0 } else { 1.0 }, 1))
    });
    s.record("t0_c_scaling", "analysis", "gamma * t0_c is the same at gamma = 0.1 and 0.2 (relative)", 1e-3, || {
        let kinds: &[EnvironmentKind] = if opts.quick { &[Noisy] } else { &EnvironmentKind::ALL };
        let mut worst: f64 = 0.0;
        for &alpha in kinds {
            let a = critical_t0(&ev, alpha, Dissipative, 0.1)?.t0_c.unwrap_or(f64::NAN);
            let b = critical_t0(&ev, alpha, Dissipative, 0.2)?.t0_c.unwrap_or(f64::NAN);
            let rel = (0.1 * a - 0.2 * b).abs() / (0.1 * a);
            worst = if rel.is_nan() { f64::INFINITY } else { worst.max(rel) };
        }
        Ok((worst, kinds.len()))
    });
    s.record("fit_synthetic", "analysis", "double-exponential fit recovers exact model data (rms)", 1e-6, || {
        let truth = FitResult { a: 0.1, b: 0.12, c: 0.003, d: 0.47, rms_residual: 0.0, fit_window: (0.15, 7.85) };
        let pts: Vec<(f64, f64)> =
            Grid::new(0.15, 7.85, 40)?.values().into_iter().map(|t| (t, truth.eval(t))).collect();
        Ok((fit_double_exponential(&pts)?.rms_residual, 1))
    });
    s.record("fit_nested", "analysis", "double-exponential rms <= single-exponential rms", 0.0, || {
        let pts = crate::reference::omega_c_curve(&ev, Dissipative, Dissipative, 0.1, Grid::new(0.15, 7.85, 12)?)?;
        let d = fit_double_exponential(&pts)?.rms_residual;
        let s1 = fit_single_exponential(&pts)?.rms_residual;
        Ok(((d - s1).max(0.0), 1))
    });
    s.record(
        "fit_computed",
        "analysis",
        "fits of computed omega_c(t0) curves on the reference windows (rms)",
        1e-3,
        || {
            let mut worst: f64 = 0.0;
            let alphas: &[EnvironmentKind] = if opts.quick { &[Dissipative] } else { &EnvironmentKind::ALL };
            let betas: &[EnvironmentKind] = if opts.quick { &[Dissipative] } else { &EnvironmentKind::ALL };
            let points = if opts.quick { 12 } else { crate::reference::FIT_POINTS };
            for &alpha in alphas {
                let (lo, hi) = crate::reference::fit_window(alpha);
                for &beta in betas {
                    let pts = crate::reference::omega_c_curve(&ev, alpha, beta, 0.1, Grid::new(lo, hi, points)?)?;
                    worst = worst.max(fit_double_exponential(&pts)?.rms_residual);
                }
            }
            Ok((worst, alphas.len() * betas.len()))
        },
    );
    s.record("sweep_monotone", "analysis", "t_c decreasing and F_max non-decreasing in omega", 0.0, || {
        let spec = SweepSpec {
            axis: SweepAxis::Omega,
            values: Grid::new(0.2, 6.0, if opts.quick { 12 } else { 60 })?.values(),
            quantity: SweepQuantity::CriticalTime,
            scenario: Scenario::new(ChannelKind::Perfect, Dissipative, 0.1, 0.0)?,
            omega: 0.0,
            t: 0.0,
        };
        let rows = sweep(&ev, &spec)?;
        let pairs: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| match r.result {
                SweepValue::Critical { t_c, f_max } => Some((t_c, f_max)),
                SweepValue::Fidelity { .. } => None,
            })
            .collect();
        let mut worst: f64 = 0.0;
        for w in pairs.windows(2) {
            worst = worst.max(if w[1].0 < w[0].0 { 0.0 } else { w[1].0 - w[0].0 + f64::MIN_POSITIVE });
            worst = worst.max(w[0].1 - w[1].1);
        }
        Ok((worst, pairs.len()))
    });
    s.record("sweep_determinism", "analysis", "serial and parallel sweeps are bit-identical", 0.0, || {
        let spec = SweepSpec {
            axis: SweepAxis::T,
            values: Grid::new(0.0, 20.0, 25)?.values(),
            quantity: SweepQuantity::Fidelity,
            scenario: Scenario::new(Dephasing.into(), Noisy, 0.1, 2.0)?,
            omega: 1.0,
            t: 0.0,
        };
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| teleport_core::error::Error::InvalidParameter(e.to_string()))?;
        let a = serial.install(|| sweep(&ev, &spec))?;
        let b = sweep(&ev, &spec)?;
        Ok((if a == b { 0.0 } else { 1.0 }, spec.values.len()))
    });

    let traceability = MODULES
        .iter()
        .map(|&m| Traceability { module: m, checks: s.checks.iter().filter(|c| c.module == m).map(|c| c.id).collect() })
        .collect();
    VerifySummary {
        passed: s.checks.iter().all(|c| c.passed),
        mode: if opts.quick { "quick" } else { "full" },
        fault_injected: opts.inject_fault,
        checks: s.checks,
        traceability,
    }
}
