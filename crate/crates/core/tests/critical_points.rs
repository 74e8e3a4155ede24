use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teleport_core::analysis::*;
use teleport_core::environment::{ChannelKind, EnvironmentKind};

use EnvironmentKind::*;

#[test]
fn critical_time_agrees_between_evaluators() {
    let s = Scenario::new(ChannelKind::Perfect, Dissipative, 0.1, 0.0).unwrap();
    let closed = max_fidelity(&Evaluator::Closed, &s, 5.0).unwrap();
    let numeric = max_fidelity(&Evaluator::numeric(), &s, 5.0).unwrap();
    assert!((closed.t_c - numeric.t_c).abs() <= 1e-5, "{} vs {}", closed.t_c, numeric.t_c);
    assert!((closed.f_max - numeric.f_max).abs() <= 1e-6);
}

#[test]
fn maximizer_beats_random_times() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cases = [
        (ChannelKind::Perfect, Dissipative, 0.5),
        (ChannelKind::Decohered(Noisy), Dephasing, 5.0),
        (ChannelKind::Decohered(Dephasing), Noisy, 0.05),
    ];
    for (channel, beta, omega) in cases {
        let s = Scenario::new(channel, beta, 0.1, 2.0).unwrap();
        let r = max_fidelity(&Evaluator::Closed, &s, omega).unwrap();
        assert_eq!(r.boundary, Boundary::Interior);
        for _ in 0..10_000 {
            let t = rng.gen_range(r.search.lo..=r.search.hi);
            let f = Evaluator::Closed.fidelity(&s, omega, t).unwrap();
            assert!(r.f_max >= f, "{channel} {beta}: F({t}) = {f} > {}", r.f_max);
        }
        for dt in [1e-4, 1e-3] {
            for side in [r.t_c - dt, r.t_c + dt] {
                assert!(r.f_max >= Evaluator::Closed.fidelity(&s, omega, side).unwrap());
            }
        }
    }
}

#[test]
fn ordering_of_best_fidelities() {
    let fmax = |channel: ChannelKind, beta, omega| {
        let s = Scenario::new(channel, beta, 0.1, 2.0).unwrap();
        max_fidelity(&Evaluator::Closed, &s, omega).unwrap().f_max
    };
    for omega in [0.5, 1.0, 5.0] {
        for channel in ChannelKind::ALL {
            let [di, no, de] = [Dissipative, Noisy, Dephasing].map(|b| fmax(channel, b, omega));
            assert!(de >= di && di >= no, "{channel} omega={omega}: {de} {di} {no}");
        }
        for beta in EnvironmentKind::ALL {
            let p = fmax(ChannelKind::Perfect, beta, omega);
            let [di, no, de] = [Dissipative, Noisy, Dephasing].map(|a| fmax(ChannelKind::Decohered(a), beta, omega));
            assert!(p >= de && de >= di && di >= no, "{beta} omega={omega}: {p} {de} {di} {no}");
        }
    }
}

#[test]
fn critical_omega_exists_for_every_perfect_channel() {
    for beta in EnvironmentKind::ALL {
        for gamma in [0.05, 0.1, 0.2] {
            let s = Scenario::new(ChannelKind::Perfect, beta, gamma, 0.0).unwrap();
            let r = critical_omega(&Evaluator::Closed, &s).unwrap();
            let w = r.omega_c.unwrap_or_else(|| panic!("{beta} {gamma}: {:?}", r.note));
            let below = max_fidelity(&Evaluator::Closed, &s, w - 1e-3).unwrap().f_max;
            let above = max_fidelity(&Evaluator::Closed, &s, w + 1e-3).unwrap().f_max;
            assert!(below < CLASSICAL_FIDELITY && CLASSICAL_FIDELITY < above, "{beta} {gamma}");
            assert!((r.f_max - CLASSICAL_FIDELITY).abs() <= 1e-6);
        }
    }
}

#[test]
fn critical_omega_scales_with_gamma() {
    let at = |gamma| {
        let s = Scenario::new(ChannelKind::Decohered(Dephasing), Noisy, gamma, 1.0 / gamma).unwrap();
        critical_omega(&Evaluator::Closed, &s).unwrap().omega_c.unwrap()
    };
    let (a, b) = (at(0.1), at(0.2));
    assert!((b / a - 2.0).abs() < 1e-5, "{a} {b}");
}

#[test]
fn critical_t0_scales_with_gamma() {
    let at = |gamma| critical_t0(&Evaluator::Closed, Noisy, Dissipative, gamma).unwrap().t0_c.unwrap();
    let (a, b) = (at(0.1), at(0.2));
    assert!((0.1 * a - 0.2 * b).abs() <= 1e-3 * 0.1 * a, "{a} {b}");
}

#[test]
fn sweeps_are_deterministic_across_thread_counts() {
    let spec = SweepSpec {
        axis: SweepAxis::Omega,
        values: Grid::new(0.2, 6.0, 12).unwrap().values(),
        quantity: SweepQuantity::CriticalTime,
        scenario: Scenario::new(ChannelKind::Decohered(Dissipative), Dephasing, 0.1, 2.0).unwrap(),
        omega: 0.0,
        t: 0.0,
    };
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let parallel = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = serial.install(|| sweep(&Evaluator::Closed, &spec)).unwrap();
    let b = parallel.install(|| sweep(&Evaluator::Closed, &spec)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, sweep(&Evaluator::Closed, &spec).unwrap());
}

#[test]
fn double_exponential_fits_computed_curves() {
    let points: Vec<(f64, f64)> = Grid::new(0.15, 7.85, 16)
        .unwrap()
        .values()
        .into_iter()
        .map(|t0| {
            let s = Scenario::new(ChannelKind::Decohered(Dissipative), Dissipative, 0.1, t0).unwrap();
            (t0, critical_omega(&Evaluator::Closed, &s).unwrap().omega_c.unwrap())
        })
        .collect();
    let double = fit_double_exponential(&points).unwrap();
    let single = fit_single_exponential(&points).unwrap();
    assert!(double.rms_residual <= 1e-3, "{double:?}");
    assert!(double.rms_residual <= single.rms_residual);
}
