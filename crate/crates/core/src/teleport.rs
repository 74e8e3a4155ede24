//! The teleportation pipeline: Bell measurement on the input qubit and the
//! sender's half of the pair, collapse of the receiver's qubit, a recovery
//! rotation that runs inside a decohering environment, and the fidelity
//! averaged over outcomes and over the Bloch sphere.
//!
//! Qubit order throughout is (input, sender's half, receiver's half).

use serde::Serialize;

use crate::environment::{generators, ChannelState, EnvironmentKind};
use crate::error::{Error, Result};
use crate::lindblad::{evolve, evolve_with_diagnostics, EvolveDiagnostics, IntegratorConfig, LindbladModel};
use crate::qmat::{kron, partial_trace, pauli, ComplexMatrix, DensityMatrix, C64, ONE, ZERO};
use crate::sphere::Quadrature;

/// Bell state `|Psi^m>`: m = 0, 3 are `(|00> +- |11>)/sqrt 2`, m = 1, 2 are
/// `(|01> +- |10>)/sqrt 2`.
pub fn bell_state(m: usize) -> Result<[C64; 4]> {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok(match m {
        0 => [s, ZERO, ZERO, s],
        1 => [ZERO, s, s, ZERO],
        2 => [ZERO, s, -s, ZERO],
        3 => [s, ZERO, ZERO, -s],
        _ => return Err(Error::IndexOutOfRange { what: "Bell outcome", index: m }),
    })
}

/// A pure input state `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InputState {
    theta: f64,
    phi: f64,
}

impl InputState {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        use std::f64::consts::PI;
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta must lie in [0, pi], got {theta}")));
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParameter(format!("phi must be finite, got {phi}")));
        }
        Ok(Self { theta, phi: phi.rem_euclid(2.0 * PI) })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn ket(&self) -> [C64; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        [C64::new(c, 0.0), C64::from_polar(s, self.phi)]
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::pure(&self.ket()).expect("normalized ket")
    }
}

/// The receiver's disturbed correction: rotation rate `omega` applied for a
/// duration `t` in an environment of kind `beta` with rate `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryConfig {
    pub beta: EnvironmentKind,
    pub gamma: f64,
    pub omega: f64,
    pub t: f64,
}

impl RecoveryConfig {
    pub fn new(beta: EnvironmentKind, gamma: f64, omega: f64, t: f64) -> Result<Self> {
        for (name, x) in [("gamma", gamma), ("omega", omega), ("t", t)] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {x}")));
            }
        }
        Ok(Self { beta, gamma, omega, t })
    }
}

fn bell_projector_on_first_two(m: usize) -> Result<ComplexMatrix> {
    let proj = ComplexMatrix::outer(&bell_state(m)?)?;
    kron(&proj, &ComplexMatrix::identity(2)?)
}

fn check_channel_input(rho_in: &DensityMatrix) -> Result<()> {
    if rho_in.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: rho_in.dim() });
    }
    Ok(())
}

/// Unnormalized receiver state `tr_{12}[(Pi_m (x) 1)(rho_in (x) rho)]`.
fn unnormalized_conditional(m: usize, rho_in: &DensityMatrix, channel: &ChannelState) -> Result<ComplexMatrix> {
    check_channel_input(rho_in)?;
    let joint = kron(rho_in.matrix(), channel.rho().matrix())?;
    let projected = bell_projector_on_first_two(m)?.try_mul(&joint)?;
    partial_trace(&projected, &[2])
}

/// Probability of Bell outcome `m`.
pub fn outcome_probability(m: usize, rho_in: &DensityMatrix, channel: &ChannelState) -> Result<f64> {
    Ok(unnormalized_conditional(m, rho_in, channel)?.trace().re)
}

/// Receiver's normalized state after outcome `m`, before any correction.
pub fn conditional_state(m: usize, rho_in: &DensityMatrix, channel: &ChannelState) -> Result<DensityMatrix> {
    let (p, rho) = conditional_with_probability(m, rho_in, channel)?;
    debug_assert!(p > 0.0);
    Ok(rho)
}

fn conditional_with_probability(
    m: usize,
    rho_in: &DensityMatrix,
    channel: &ChannelState,
) -> Result<(f64, DensityMatrix)> {
    let raw = unnormalized_conditional(m, rho_in, channel)?;
    let p = raw.trace().re;
    if !(p > 1e-300) {
        return Err(Error::DegenerateOutcome(m));
    }
    let mut rho = raw.scale_real(1.0 / p);
    // Remove rounding asymmetry introduced by the 8x8 products.
    let herm = &(&rho + &rho.adjoint()).scale_real(0.5);
    rho = herm.clone();
    Ok((p, DensityMatrix::new(rho)?))
}

/// Lindblad model of the correction for outcome `m`: `H = -omega sigma^m / 2`
/// with the single-qubit generators of `beta`.
pub fn recovery_model(beta: EnvironmentKind, m: usize, gamma: f64, omega: f64) -> Result<LindbladModel> {
    let h = pauli(m)?.scale_real(-0.5 * omega);
    LindbladModel::new(h, generators(beta, 1)?, gamma)
}

/// Teleported state for outcome `m`.
pub fn output_state(
    m: usize,
    rho_in: &DensityMatrix,
    channel: &ChannelState,
    rec: &RecoveryConfig,
    cfg: &IntegratorConfig,
) -> Result<DensityMatrix> {
    let rho = conditional_state(m, rho_in, channel)?;
    let model = recovery_model(rec.beta, m, rec.gamma, rec.omega)?;
    evolve(&model, &rho, rec.t, cfg)
}

/// Integrated recovery map for one outcome. The map is linear, so it is
/// fixed by its action on four density matrices spanning the Hermitian
/// operators: `|0><0|`, `|1><1|`, `|+><+|` and `|+i><+i|`.
#[derive(Debug, Clone)]
pub struct RecoveryMap {
    images: [ComplexMatrix; 4],
    diagnostics: Vec<EvolveDiagnostics>,
}

impl RecoveryMap {
    pub fn integrate(model: &LindbladModel, t: f64, cfg: &IntegratorConfig) -> Result<Self> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let probes =
            [[ONE, ZERO], [ZERO, ONE], [C64::new(s, 0.0), C64::new(s, 0.0)], [C64::new(s, 0.0), C64::new(0.0, s)]];
        let mut diagnostics = Vec::with_capacity(4);
        let mut images = Vec::with_capacity(4);
        for ket in probes {
            let (rho, diag) = evolve_with_diagnostics(model, &DensityMatrix::pure(&ket)?, t, cfg)?;
            images.push(rho.into_matrix());
            diagnostics.push(diag);
        }
        let images: [ComplexMatrix; 4] = images.try_into().expect("four probes");
        Ok(Self { images, diagnostics })
    }

    /// Image of a Hermitian 2x2 operator.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let q = rho[(0, 1)];
        let shift = q.re - q.im;
        let coeffs = [rho[(0, 0)].re - shift, rho[(1, 1)].re - shift, 2.0 * q.re, -2.0 * q.im];
        let mut out = self.images[0].scale_real(coeffs[0]);
        for (img, c) in self.images.iter().zip(coeffs).skip(1) {
            out = &out + &img.scale_real(c);
        }
        out
    }

    pub fn diagnostics(&self) -> &[EvolveDiagnostics] {
        &self.diagnostics
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Numeric,
    Closed,
}

/// Outcome data at one quadrature node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
    pub probabilities: [f64; 4],
    pub fidelities: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    pub method: Method,
    /// Sphere-averaged outcome probabilities.
    pub probabilities: Option<[f64; 4]>,
    /// Probability-weighted, sphere-averaged fidelity of each outcome.
    pub fidelities: Option<[f64; 4]>,
    pub fidelity: f64,
    /// Per-node data; filled for the six-point rule only.
    pub points: Vec<PointReport>,
    /// Worst integration diagnostics over all recovery evolutions.
    pub worst_trace_drift: f64,
    pub worst_hermiticity_drift: f64,
    pub min_eigenvalue: f64,
}

impl FidelityReport {
    pub fn closed(fidelity: f64) -> Self {
        Self {
            method: Method::Closed,
            probabilities: None,
            fidelities: None,
            fidelity,
            points: Vec::new(),
            worst_trace_drift: 0.0,
            worst_hermiticity_drift: 0.0,
            min_eigenvalue: 0.0,
        }
    }
}

/// Average teleportation fidelity by direct simulation.
pub fn average_fidelity(
    channel: &ChannelState,
    rec: &RecoveryConfig,
    quadrature: Quadrature,
    cfg: &IntegratorConfig,
) -> Result<FidelityReport> {
    let maps: Vec<RecoveryMap> = (0..4)
        .map(|m| RecoveryMap::integrate(&recovery_model(rec.beta, m, rec.gamma, rec.omega)?, rec.t, cfg))
        .collect::<Result<_>>()?;
    let keep_points = matches!(quadrature, Quadrature::Octahedral6);
    let mut fidelity = 0.0;
    let mut p_avg = [0.0; 4];
    let mut pf_avg = [0.0; 4];
    let mut points = Vec::new();
    for node in quadrature.points()? {
        let input = InputState::new(node.theta, node.phi)?;
        let ket = input.ket();
        let rho_in = input.density();
        let mut probabilities = [0.0; 4];
        let mut fidelities = [0.0; 4];
        for (m, map) in maps.iter().enumerate() {
            let (p, cond) = conditional_with_probability(m, &rho_in, channel)?;
            let out = map.apply(cond.matrix());
            let f = out.expectation(&ket)?.re;
            probabilities[m] = p;
            fidelities[m] = f;
            p_avg[m] += node.weight * p;
            pf_avg[m] += node.weight * p * f;
            fidelity += node.weight * p * f;
        }
        if keep_points {
            points.push(PointReport {
                theta: node.theta,
                phi: node.phi,
                weight: node.weight,
                probabilities,
                fidelities,
            });
        }
    }
    let diags = maps.iter().flat_map(|m| m.diagnostics.iter());
    let (mut trace, mut herm, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    for d in diags {
        trace = trace.max(d.trace_drift);
        herm = herm.max(d.hermiticity_drift);
        min_eig = min_eig.min(d.min_eigenvalue);
    }
    let mut f_m = [0.0; 4];
    for m in 0..4 {
        f_m[m] = if p_avg[m] > 0.0 { pf_avg[m] / p_avg[m] } else { 0.0 };
    }
    Ok(FidelityReport {
        method: Method::Numeric,
        probabilities: Some(p_avg),
        fidelities: Some(f_m),
        fidelity,
        points,
        worst_trace_drift: trace,
        worst_hermiticity_drift: herm,
        min_eigenvalue: min_eig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{channel_state_closed, ChannelKind};
    use std::f64::consts::PI;
    use EnvironmentKind::*;

    fn some_input() -> DensityMatrix {
        InputState::new(1.1, 0.4).unwrap().density()
    }

    #[test]
    fn bell_states() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(bell_state(0).unwrap(), [C64::new(s, 0.0), ZERO, ZERO, C64::new(s, 0.0)]);
        assert_eq!(bell_state(2).unwrap(), [ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO]);
        for a in 0..4 {
            for b in 0..4 {
                let (x, y) = (bell_state(a).unwrap(), bell_state(b).unwrap());
                let ip: C64 = x.iter().zip(&y).map(|(p, q)| p.conj() * q).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
        assert!(bell_state(4).is_err());
    }

    #[test]
    fn input_state_ranges() {
        assert!(InputState::new(-0.1, 0.0).is_err());
        assert!(InputState::new(3.5, 0.0).is_err());
        assert!((InputState::new(1.0, 7.0).unwrap().phi() - (7.0 - 2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn perfect_channel_outcomes_are_uniform() {
        let ch = ChannelState::perfect();
        for m in 0..4 {
            assert!((outcome_probability(m, &some_input(), &ch).unwrap() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn perfect_channel_conditional_states() {
        let ch = ChannelState::perfect();
        let rho_in = some_input();
        let c0 = conditional_state(0, &rho_in, &ch).unwrap();
        assert!(c0.matrix().max_abs_diff(rho_in.matrix()) < 1e-15);
        let x = pauli(1).unwrap();
        let c1 = conditional_state(1, &rho_in, &ch).unwrap();
        let want = &(&x * rho_in.matrix()) * &x;
        assert!(c1.matrix().max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn relaxed_pair_leaves_excited_receiver() {
        let ch = channel_state_closed(ChannelKind::Decohered(Dissipative), 1.0, 50.0).unwrap();
        let one = ComplexMatrix::diagonal(&[ZERO, ONE]).unwrap();
        for m in 0..4 {
            let c = conditional_state(m, &some_input(), &ch).unwrap();
            assert!(c.matrix().max_abs_diff(&one) < 1e-12);
        }
    }

    #[test]
    fn outcome_probabilities_sum_to_one() {
        for kind in ChannelKind::ALL {
            let ch = channel_state_closed(kind, 0.1, 2.0).unwrap();
            let total: f64 = (0..4).map(|m| outcome_probability(m, &some_input(), &ch).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_recovers_flip() {
        let w = 2.0;
        let model = recovery_model(Dephasing, 1, 0.0, w).unwrap();
        let zero = DensityMatrix::pure(&[ONE, ZERO]).unwrap();
        let out = evolve(&model, &zero, PI / w, &IntegratorConfig::checked()).unwrap();
        assert!((out[(1, 1)].re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_index_hamiltonian_is_pure_decoherence() {
        let rho = some_input();
        let with_h = recovery_model(Noisy, 0, 0.3, 4.0).unwrap();
        let without = LindbladModel::new(ComplexMatrix::zeros(2).unwrap(), generators(Noisy, 1).unwrap(), 0.3).unwrap();
        let cfg = IntegratorConfig::default();
        let a = evolve(&with_h, &rho, 2.5, &cfg).unwrap();
        let b = evolve(&without, &rho, 2.5, &cfg).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
    }

    #[test]
    fn ideal_recovery_returns_input() {
        let rec = RecoveryConfig::new(Dissipative, 0.0, 1.7, PI / 1.7).unwrap();
        let rho_in = some_input();
        for m in 0..4 {
            let out = output_state(m, &rho_in, &ChannelState::perfect(), &rec, &IntegratorConfig::checked()).unwrap();
            assert!(out.matrix().max_abs_diff(rho_in.matrix()) < 1e-8);
        }
    }

    #[test]
    fn long_dissipative_recovery_relaxes() {
        let rec = RecoveryConfig::new(Dissipative, 1.0, 0.0, 60.0).unwrap();
        let out = output_state(0, &some_input(), &ChannelState::perfect(), &rec, &IntegratorConfig::default()).unwrap();
        assert!((out[(1, 1)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recovery_map_matches_direct_evolution() {
        let model = recovery_model(Noisy, 2, 0.2, 1.3).unwrap();
        let cfg = IntegratorConfig::default();
        let map = RecoveryMap::integrate(&model, 3.1, &cfg).unwrap();
        for (th, ph) in [(0.3, 1.0), (2.0, 4.0), (PI, 0.0)] {
            let rho = InputState::new(th, ph).unwrap().density();
            let direct = evolve(&model, &rho, 3.1, &cfg).unwrap();
            assert!(map.apply(rho.matrix()).max_abs_diff(direct.matrix()) < 1e-13);
        }
    }

    #[test]
    fn ideal_protocol_has_unit_fidelity() {
        let rec = RecoveryConfig::new(Dissipative, 0.0, 1.0, PI).unwrap();
        let r = average_fidelity(&ChannelState::perfect(), &rec, Quadrature::Octahedral6, &IntegratorConfig::default())
            .unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-8);
        assert_eq!(r.points.len(), 6);
    }

    #[test]
    fn no_recovery_gives_one_half() {
        for beta in EnvironmentKind::ALL {
            let rec = RecoveryConfig::new(beta, 0.1, 1.0, 0.0).unwrap();
            let r =
                average_fidelity(&ChannelState::perfect(), &rec, Quadrature::Octahedral6, &IntegratorConfig::default())
                    .unwrap();
            assert!((r.fidelity - 0.5).abs() < 1e-12);
            let p: f64 = r.probabilities.unwrap().iter().sum();
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fully_entangled_fraction_relation() {
        let ch = channel_state_closed(ChannelKind::Decohered(Dissipative), 0.1, 2.0).unwrap();
        let fe = ch.bell_overlap();
        assert!((fe - 0.835160023).abs() < 1e-9);
        let rec = RecoveryConfig::new(Dephasing, 0.0, 1.0, PI).unwrap();
        let r = average_fidelity(&ch, &rec, Quadrature::Octahedral6, &IntegratorConfig::default()).unwrap();
        assert!((r.fidelity - (2.0 * fe + 1.0) / 3.0).abs() < 1e-6);
        assert!((r.fidelity - 0.890106682).abs() < 1e-6);
    }
}
