//! Analytic average fidelities.
//!
//! Every expression is evaluated in real arithmetic. The square roots
//! `u = sqrt(gamma^2 - 16 omega^2)/4` and `v = sqrt(gamma^2 - 4 omega^2)/2`
//! may be imaginary, so each `cosh(ut)`, `sinh(ut)/u` pair goes through
//! [`hyp_pair`], which switches to `cos`, `sin/|u|` for a negative radicand
//! and to a series near the degenerate point. The pairs always appear
//! multiplied by a decaying exponential; [`hyp_pair_damped`] folds that
//! factor in so long recovery times do not overflow.

use serde::Serialize;

use crate::environment::{ChannelKind, EnvironmentKind};
use crate::error::{Error, Result};

/// Below this value of `|w^2| t^2` the Taylor series is used.
const SERIES_THRESHOLD: f64 = 1e-8;

/// `c = cosh(wt)` and `s_over_w = sinh(wt)/w` continued to imaginary `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypPair {
    pub c: f64,
    pub s_over_w: f64,
}

/// `(cosh(wt), sinh(wt)/w)` given `w^2`, which may be negative or zero.
pub fn hyp_pair(w_squared: f64, t: f64) -> HypPair {
    hyp_pair_damped(w_squared, t, 0.0)
}

/// [`hyp_pair`] with both members multiplied by `exp(-decay * t)`.
pub fn hyp_pair_damped(w_squared: f64, t: f64, decay: f64) -> HypPair {
    let x = w_squared * t * t;
    if x.abs() < SERIES_THRESHOLD {
        let d = (-decay * t).exp();
        return HypPair { c: d * (1.0 + x / 2.0 + x * x / 24.0), s_over_w: d * t * (1.0 + x / 6.0 + x * x / 120.0) };
    }
    if w_squared > 0.0 {
        let w = w_squared.sqrt();
        if w * t < 1.0 {
            let d = (-decay * t).exp();
            return HypPair { c: d * (w * t).cosh(), s_over_w: d * (w * t).sinh() / w };
        }
        let grow = ((w - decay) * t).exp();
        let shrink = (-(w + decay) * t).exp();
        HypPair { c: 0.5 * (grow + shrink), s_over_w: 0.5 * (grow - shrink) / w }
    } else {
        let w = (-w_squared).sqrt();
        let d = (-decay * t).exp();
        let (s, c) = (w * t).sin_cos();
        HypPair { c: d * c, s_over_w: d * s / w }
    }
}

/// The auxiliary functions shared by all fidelity formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub mu1: f64,
    pub mu2: f64,
}

fn check_args(args: &[(&str, f64)]) -> Result<()> {
    for (name, x) in args {
        if !(*x >= 0.0) || !x.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {x}")));
        }
    }
    Ok(())
}

pub fn params(gamma: f64, omega: f64, t: f64) -> Result<ClosedFormParams> {
    check_args(&[("gamma", gamma), ("omega", omega), ("t", t)])?;
    let (g, w) = (gamma, omega);
    let (g2, w2) = (g * g, w * w);
    let u2 = (g2 - 16.0 * w2) / 16.0;
    let v2 = (g2 - 4.0 * w2) / 4.0;
    // Pairs carrying their exponential prefactor.
    let u_slow = hyp_pair_damped(u2, t, 0.75 * g);
    let u_fast = hyp_pair_damped(u2, t, 0.25 * g);
    let v_pair = hyp_pair_damped(v2, t, 1.5 * g);
    let den = g2 + 2.0 * w2;

    let (alpha1, alpha3) = if den > 0.0 {
        let ratio = w2 / den;
        let a1 = ((g2 + w2) * u_slow.c - 0.25 * g * (g2 + 5.0 * w2) * u_slow.s_over_w) / den + ratio;
        let a3 = ratio * (1.0 - (0.75 * g * u_slow.s_over_w + u_slow.c));
        (a1, a3)
    } else {
        // gamma = omega = 0: no dynamics at all
        (1.0, 0.0)
    };
    let alpha2 = 0.5 * ((-0.5 * g * t).exp() - (0.25 * g * u_slow.s_over_w + u_slow.c));
    let beta1 = 0.5 * (1.0 - (0.5 * g * v_pair.s_over_w - v_pair.c));
    let beta2 = 0.5 * ((-g * t).exp() - (0.5 * g * v_pair.s_over_w + v_pair.c));
    let mu1 = 0.5 * (1.0 + 0.25 * g * u_fast.s_over_w + u_fast.c);
    let mu2 = 0.5 * ((-0.5 * g * t).exp() + 0.25 * g * u_fast.s_over_w - u_fast.c);
    Ok(ClosedFormParams { alpha1, alpha2, alpha3, beta1, beta2, mu1, mu2 })
}

/// Average fidelity with an undisturbed Bell pair and a recovery disturbed
/// by `beta`.
pub fn f_perfect(beta: EnvironmentKind, gamma: f64, omega: f64, t: f64) -> Result<f64> {
    let p = params(gamma, omega, t)?;
    let g = gamma;
    let osc = (0.5 * omega * t).sin().powi(2);
    Ok(match beta {
        EnvironmentKind::Dissipative => {
            0.5 + ((-g * t).exp() - p.alpha1 + 2.0 * p.alpha2 + p.alpha3) / 12.0 + (-0.5 * g * t).exp() * osc / 6.0
        }
        EnvironmentKind::Noisy => {
            7.0 / 12.0 + (p.beta2 - p.beta1) / 6.0 + (-2.0 * g * t).exp() / 12.0 + (-g * t).exp() * osc / 6.0
        }
        EnvironmentKind::Dephasing => 2.0 / 3.0 + (p.mu2 - p.mu1) / 6.0 + (-0.5 * g * t).exp() * osc / 6.0,
    })
}

/// Which form of the dissipative-channel / noisy-recovery expression to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Transcription {
    /// Leading term `7/12 + e^{-2 gamma t}/12`; agrees with simulation and
    /// reduces to [`f_perfect`] at `t0 = 0`.
    #[default]
    Consistent,
    /// Leading term `2/3` as originally published.
    AsPublished,
}

/// Average fidelity when the pair was transmitted for `t0` through
/// environment `alpha` and the recovery is disturbed by `beta`.
pub fn f_channel(
    alpha: EnvironmentKind,
    beta: EnvironmentKind,
    gamma: f64,
    omega: f64,
    t: f64,
    t0: f64,
) -> Result<f64> {
    f_channel_with(alpha, beta, gamma, omega, t, t0, Transcription::Consistent)
}

pub fn f_channel_with(
    alpha: EnvironmentKind,
    beta: EnvironmentKind,
    gamma: f64,
    omega: f64,
    t: f64,
    t0: f64,
    form: Transcription,
) -> Result<f64> {
    use EnvironmentKind::*;
    check_args(&[("t0", t0)])?;
    let p = params(gamma, omega, t)?;
    let g = gamma;
    let osc = (0.5 * omega * t).sin().powi(2);
    let e_t = (-g * t).exp();
    let e_half_t = (-0.5 * g * t).exp();
    let e_2t = (-2.0 * g * t).exp();
    let c1 = (-g * t0).exp();
    let c2 = (-2.0 * g * t0).exp();
    let c4 = (-4.0 * g * t0).exp();
    Ok(match (alpha, beta) {
        (Dissipative, Dissipative) => {
            0.5 + (2.0 * c2 - c1) * (e_t - p.alpha1 + p.alpha3) / 12.0
                + p.alpha3 / 6.0
                + c1 * (p.alpha2 - p.alpha3 + e_half_t * osc) / 6.0
        }
        (Dissipative, Noisy) => {
            let lead = match form {
                Transcription::Consistent => 7.0 / 12.0 + e_2t / 12.0,
                Transcription::AsPublished => 2.0 / 3.0,
            };
            lead + (c2 - c1) * (e_2t - 2.0 * p.beta1 + 1.0) / 6.0 - p.beta1 / 6.0 + c1 * (p.beta2 + e_t * osc) / 6.0
        }
        (Dissipative, Dephasing) => {
            2.0 / 3.0 + (c2 - c1) * (1.0 - p.mu1) / 3.0 - p.mu1 / 6.0 + c1 * (p.mu2 + e_half_t * osc) / 6.0
        }
        (Noisy, Dissipative) => 0.5 + c4 * (e_t - p.alpha1 + p.alpha3) / 12.0 + c2 * (p.alpha2 + e_half_t * osc) / 6.0,
        (Noisy, Noisy) => 0.5 + c4 * (e_2t - 2.0 * p.beta1 + 1.0) / 12.0 + c2 * (p.beta2 + e_t * osc) / 6.0,
        (Noisy, Dephasing) => 0.5 + c4 * (1.0 - p.mu1) / 6.0 + c2 * (p.mu2 + e_half_t * osc) / 6.0,
        (Dephasing, Dissipative) => 0.5 + (e_t - p.alpha1 + p.alpha3) / 12.0 + c1 * (p.alpha2 + e_half_t * osc) / 6.0,
        (Dephasing, Noisy) => 7.0 / 12.0 + e_2t / 12.0 - p.beta1 / 6.0 + c1 * (p.beta2 + e_t * osc) / 6.0,
        (Dephasing, Dephasing) => 2.0 / 3.0 - p.mu1 / 6.0 + c1 * (p.mu2 + e_half_t * osc) / 6.0,
    })
}

/// Closed-form fidelity for any channel kind; `t0` is ignored for the
/// perfect channel.
pub fn fidelity(channel: ChannelKind, beta: EnvironmentKind, gamma: f64, omega: f64, t: f64, t0: f64) -> Result<f64> {
    match channel {
        ChannelKind::Perfect => f_perfect(beta, gamma, omega, t),
        ChannelKind::Decohered(alpha) => f_channel(alpha, beta, gamma, omega, t, t0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use EnvironmentKind::*;

    #[test]
    fn hyp_pair_examples() {
        assert_eq!(hyp_pair(0.0, 3.0), HypPair { c: 1.0, s_over_w: 3.0 });
        let h = hyp_pair(1.0, 1.0);
        assert!((h.c - 1.5430806348).abs() < 1e-9);
        assert!((h.s_over_w - 1.1752011936).abs() < 1e-9);
        let h = hyp_pair(-4.0, PI / 2.0);
        assert!((h.c + 1.0).abs() < 1e-15);
        assert!(h.s_over_w.abs() < 1e-15);
    }

    #[test]
    fn series_branch_matches_functions() {
        for t in [0.5, 3.0, 40.0] {
            let x = 0.99 * SERIES_THRESHOLD;
            let w = x.sqrt() / t;
            let h = hyp_pair(w * w, t);
            assert!((h.c - (w * t).cosh()).abs() < 1e-15);
            assert!((h.s_over_w - (w * t).sinh() / w).abs() < 1e-14 * t);
            let h = hyp_pair(-w * w, t);
            assert!((h.c - (w * t).cos()).abs() < 1e-15);
            assert!((h.s_over_w - (w * t).sin() / w).abs() < 1e-14 * t);
        }
    }

    #[test]
    fn damped_pair_does_not_overflow() {
        let h = hyp_pair_damped(1.0, 2000.0, 3.0);
        assert!(h.c.is_finite() && h.s_over_w.is_finite());
        assert!(h.c >= 0.0 && h.c < 1e-300);
        let h = hyp_pair_damped(1.0, 2000.0, 1.0);
        assert!((h.c - 0.5).abs() < 1e-12);
        let plain = hyp_pair(1.0, 5.0);
        let damped = hyp_pair_damped(1.0, 5.0, 0.4);
        assert!((damped.c - plain.c * (-2.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn params_at_zero_time() {
        for (g, w) in [(0.1, 1.0), (0.4, 0.1), (0.0, 2.0), (0.3, 0.0), (0.0, 0.0)] {
            let p = params(g, w, 0.0).unwrap();
            let want =
                ClosedFormParams { alpha1: 1.0, alpha2: 0.0, alpha3: 0.0, beta1: 1.0, beta2: 0.0, mu1: 1.0, mu2: 0.0 };
            for (a, b) in [
                (p.alpha1, want.alpha1),
                (p.alpha2, want.alpha2),
                (p.alpha3, want.alpha3),
                (p.beta1, want.beta1),
                (p.beta2, want.beta2),
                (p.mu1, want.mu1),
                (p.mu2, want.mu2),
            ] {
                assert!((a - b).abs() < 1e-15, "{p:?}");
            }
        }
    }

    #[test]
    fn params_without_decoherence() {
        let w = 0.7;
        let p = params(0.0, w, PI / w).unwrap();
        assert!(p.alpha1.abs() < 1e-14);
        assert!((p.alpha2 - 1.0).abs() < 1e-14);
        assert!((p.alpha3 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn params_continuous_at_degenerate_rate() {
        let g = 0.4;
        for w_star in [g / 4.0, g / 2.0] {
            for t in [0.3, 7.0, 60.0] {
                let mid = params(g, w_star, t).unwrap();
                for dw in [1e-6, -1e-6] {
                    let near = params(g, w_star + dw, t).unwrap();
                    assert!((mid.alpha1 - near.alpha1).abs() < 1e-4);
                    assert!((mid.beta1 - near.beta1).abs() < 1e-4);
                    assert!((mid.mu2 - near.mu2).abs() < 1e-4);
                }
            }
        }
    }

    #[test]
    fn perfect_channel_limits() {
        for beta in EnvironmentKind::ALL {
            assert!((f_perfect(beta, 0.1, 3.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
            assert!((f_perfect(beta, 0.0, 2.0, PI / 2.0).unwrap() - 1.0).abs() < 1e-14);
        }
        let f = f_perfect(Dissipative, 0.1, 200.0, PI / 200.0).unwrap();
        assert!((f - 0.999476697).abs() < 1e-8, "{f}");
    }

    #[test]
    fn channel_formulas_reduce_at_zero_transmission() {
        for alpha in EnvironmentKind::ALL {
            for beta in EnvironmentKind::ALL {
                for (g, w, t) in [(0.1, 1.0, 2.0), (0.05, 0.02, 20.0), (0.2, 5.0, 0.1)] {
                    let a = f_channel(alpha, beta, g, w, t, 0.0).unwrap();
                    let b = f_perfect(beta, g, w, t).unwrap();
                    assert!((a - b).abs() < 1e-12, "{alpha} {beta}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn published_variant_differs_only_in_one_case() {
        let a = f_channel_with(Dissipative, Noisy, 0.1, 1.0, 5.0, 2.0, Transcription::AsPublished).unwrap();
        let b = f_channel(Dissipative, Noisy, 0.1, 1.0, 5.0, 2.0).unwrap();
        assert!((a - b).abs() > 1e-3);
        let c = f_channel_with(Noisy, Noisy, 0.1, 1.0, 5.0, 2.0, Transcription::AsPublished).unwrap();
        assert_eq!(c, f_channel(Noisy, Noisy, 0.1, 1.0, 5.0, 2.0).unwrap());
    }

    #[test]
    fn no_recovery_is_one_half_for_every_channel() {
        for alpha in EnvironmentKind::ALL {
            for beta in EnvironmentKind::ALL {
                let f = f_channel(alpha, beta, 0.1, 0.5, 0.0, 2.0).unwrap();
                assert!((f - 0.5).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn long_times_stay_finite() {
        for beta in [Dissipative, Noisy] {
            let f = f_perfect(beta, 0.1, 1e-4, 1e5).unwrap();
            assert!((f - 0.5).abs() < 1e-6, "{beta}: {f}");
        }
        assert!(f_perfect(Dephasing, 0.1, 1e-4, 1e5).unwrap().is_finite());
    }

    #[test]
    fn rejects_negative_arguments() {
        assert!(params(-0.1, 1.0, 1.0).is_err());
        assert!(f_channel(Noisy, Noisy, 0.1, 1.0, 1.0, -1.0).is_err());
    }
}
