//! Decoherence environments, the decohered channel pair they produce, and
//! its entanglement.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{evolve, IntegratorConfig, LindbladModel};
use crate::qmat::{kron, sigma_minus, sigma_plus, ComplexMatrix, DensityMatrix, C64};

/// Entries allowed to be nonzero in an X-state: the diagonal and the
/// anti-diagonal, with 0-based indices into the `|00>,|01>,|10>,|11>` basis.
const X_STATE_SUPPORT: [(usize, usize); 8] = [(0, 0), (1, 1), (2, 2), (3, 3), (0, 3), (3, 0), (1, 2), (2, 1)];

/// Stray entries up to this size are still treated as an X-state.
const X_STATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EnvironmentKind {
    /// Amplitude damping, generator `sigma^-`.
    #[serde(rename = "di")]
    Dissipative,
    /// Symmetric exchange, generators `sigma^-` and `sigma^+`.
    #[serde(rename = "no")]
    Noisy,
    /// Pure dephasing, generator `sigma^+ sigma^-`.
    #[serde(rename = "de")]
    Dephasing,
}

impl EnvironmentKind {
    pub const ALL: [EnvironmentKind; 3] = [Self::Dissipative, Self::Noisy, Self::Dephasing];

    pub fn label(self) -> &'static str {
        match self {
            Self::Dissipative => "di",
            Self::Noisy => "no",
            Self::Dephasing => "de",
        }
    }
}

impl fmt::Display for EnvironmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EnvironmentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "di" | "dissipative" => Ok(Self::Dissipative),
            "no" | "noisy" => Ok(Self::Noisy),
            "de" | "dephasing" => Ok(Self::Dephasing),
            other => Err(Error::InvalidParameter(format!("unknown environment '{other}'"))),
        }
    }
}

/// How the shared pair was distributed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "&'static str", try_from = "String")]
pub enum ChannelKind {
    Perfect,
    Decohered(EnvironmentKind),
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 4] = [
        Self::Perfect,
        Self::Decohered(EnvironmentKind::Dissipative),
        Self::Decohered(EnvironmentKind::Noisy),
        Self::Decohered(EnvironmentKind::Dephasing),
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::Perfect => "p",
            Self::Decohered(k) => k.label(),
        }
    }

    pub fn environment(self) -> Option<EnvironmentKind> {
        match self {
            Self::Perfect => None,
            Self::Decohered(k) => Some(k),
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ChannelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "p" | "perfect" => Ok(Self::Perfect),
            other => other.parse().map(Self::Decohered),
        }
    }
}

impl From<ChannelKind> for &'static str {
    fn from(c: ChannelKind) -> Self {
        c.label()
    }
}

impl TryFrom<String> for ChannelKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EnvironmentKind> for ChannelKind {
    fn from(k: EnvironmentKind) -> Self {
        Self::Decohered(k)
    }
}

/// Local collapse operators of `kind` for one or two qubits. For two qubits
/// every single-qubit generator appears as `L (x) 1` and `1 (x) L`.
pub fn generators(kind: EnvironmentKind, qubits: usize) -> Result<Vec<ComplexMatrix>> {
    let local = match kind {
        EnvironmentKind::Dissipative => vec![sigma_minus()],
        EnvironmentKind::Noisy => vec![sigma_minus(), sigma_plus()],
        EnvironmentKind::Dephasing => vec![&sigma_plus() * &sigma_minus()],
    };
    match qubits {
        1 => Ok(local),
        2 => {
            let id = ComplexMatrix::identity(2)?;
            let mut ops = Vec::with_capacity(2 * local.len());
            for l in &local {
                ops.push(kron(l, &id)?);
            }
            for l in &local {
                ops.push(kron(&id, l)?);
            }
            Ok(ops)
        }
        n => Err(Error::InvalidParameter(format!("generators support 1 or 2 qubits, got {n}"))),
    }
}

/// The two-qubit resource shared by sender and receiver after a transmission
/// of duration `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    kind: ChannelKind,
    gamma: f64,
    t0: f64,
    rho: DensityMatrix,
}

impl ChannelState {
    pub fn new(kind: ChannelKind, gamma: f64, t0: f64, rho: DensityMatrix) -> Result<Self> {
        check_nonnegative("gamma", gamma)?;
        check_nonnegative("t0", t0)?;
        if rho.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: rho.dim() });
        }
        let stray = x_state_violation(rho.matrix());
        if stray > X_STATE_TOLERANCE {
            return Err(Error::NotXState(stray));
        }
        Ok(Self { kind, gamma, t0, rho })
    }

    pub fn perfect() -> Self {
        Self { kind: ChannelKind::Perfect, gamma: 0.0, t0: 0.0, rho: bell_projector() }
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    /// `<Psi0| rho |Psi0>`, the overlap with the initially shared Bell state.
    pub fn bell_overlap(&self) -> f64 {
        let m = self.rho.matrix();
        0.5 * (m[(0, 0)] + m[(3, 3)] + m[(0, 3)] + m[(3, 0)]).re
    }
}

fn check_nonnegative(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {x}")))
    }
}

fn bell_projector() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    DensityMatrix::pure(&[C64::new(s, 0.0), z, z, C64::new(s, 0.0)]).expect("Bell state")
}

/// Largest modulus among entries outside the X-state support.
pub fn x_state_violation(m: &ComplexMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if !X_STATE_SUPPORT.contains(&(i, j)) {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

/// Assembles the decohered pair from its analytic matrix elements.
pub fn channel_state_closed(kind: ChannelKind, gamma: f64, t0: f64) -> Result<ChannelState> {
    check_nonnegative("gamma", gamma)?;
    check_nonnegative("t0", t0)?;
    let env = match kind {
        ChannelKind::Perfect => return Ok(ChannelState { gamma, t0, ..ChannelState::perfect() }),
        ChannelKind::Decohered(env) => env,
    };
    let e1 = (-gamma * t0).exp();
    let e2 = (-2.0 * gamma * t0).exp();
    let e4 = (-4.0 * gamma * t0).exp();
    // (rho11, rho22, rho33, rho44, rho14)
    let (d1, d2, d3, d4, coh) = match env {
        EnvironmentKind::Dissipative => {
            let mid = 0.5 * (e1 - e2);
            (0.5 * e2, mid, mid, 1.0 - e1 + 0.5 * e2, 0.5 * e1)
        }
        EnvironmentKind::Noisy => {
            let outer = 0.25 * (1.0 + e4);
            let inner = 0.25 * (1.0 - e4);
            (outer, inner, inner, outer, 0.5 * e2)
        }
        EnvironmentKind::Dephasing => (0.5, 0.0, 0.0, 0.5, 0.5 * e1),
    };
    let mut m = ComplexMatrix::diagonal(&[d1, d2, d3, d4].map(|x| C64::new(x, 0.0)))?;
    m[(0, 3)] = C64::new(coh, 0.0);
    m[(3, 0)] = C64::new(coh, 0.0);
    let rho = DensityMatrix::new(m)?;
    ChannelState::new(kind, gamma, t0, rho)
}

/// Integrates the Bell state under the two-qubit generators of `kind` with
/// no Hamiltonian for a duration `t0`.
pub fn channel_state_numeric(kind: ChannelKind, gamma: f64, t0: f64, cfg: &IntegratorConfig) -> Result<ChannelState> {
    check_nonnegative("gamma", gamma)?;
    check_nonnegative("t0", t0)?;
    let env = match kind {
        ChannelKind::Perfect => return Ok(ChannelState { gamma, t0, ..ChannelState::perfect() }),
        ChannelKind::Decohered(env) => env,
    };
    let model = LindbladModel::new(ComplexMatrix::zeros(4)?, generators(env, 2)?, gamma)?;
    let rho = evolve(&model, &bell_projector(), t0, cfg)?;
    ChannelState::new(kind, gamma, t0, rho)
}

/// Wootters concurrence, evaluated with the X-state formula.
pub fn concurrence(state: &ChannelState) -> Result<f64> {
    concurrence_x_state(state.rho.matrix())
}

pub fn concurrence_x_state(m: &ComplexMatrix) -> Result<f64> {
    if m.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, found: m.dim() });
    }
    let stray = x_state_violation(m);
    if stray > X_STATE_TOLERANCE {
        return Err(Error::NotXState(stray));
    }
    let diag = |i: usize| m[(i, i)].re.max(0.0);
    let a = m[(0, 3)].norm() - (diag(1) * diag(2)).sqrt();
    let b = m[(1, 2)].norm() - (diag(0) * diag(3)).sqrt();
    Ok((2.0 * a.max(b).max(0.0)).min(1.0))
}

/// Transmission time at which the concurrence first vanishes, if it ever
/// does. Only the noisy environment kills entanglement in finite time.
pub fn esd_time(kind: EnvironmentKind, gamma: f64) -> Result<Option<f64>> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    Ok(match kind {
        EnvironmentKind::Noisy => Some((1.0 + 2f64.sqrt()).ln() / (2.0 * gamma)),
        EnvironmentKind::Dissipative | EnvironmentKind::Dephasing => None,
    })
}
