//! Every numerical threshold used by validation code lives here.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// |tr(rho) - 1| accepted for a density matrix.
    pub trace: f64,
    /// Entrywise max |A - A^dagger|.
    pub hermiticity: f64,
    /// Smallest eigenvalue accepted for a stored density matrix is `-psd`.
    pub psd: f64,
    /// Looser positivity bound applied after integration.
    pub evolve_min_eigenvalue: f64,
    /// Entrywise agreement of a half-step re-integration.
    pub richardson: f64,
    /// Off-diagonal Frobenius norm at which Jacobi sweeps stop.
    pub jacobi_offdiag: f64,
    /// Closed form vs. simulated average fidelity.
    pub two_path: f64,
    /// Octahedral vs. dense spherical quadrature.
    pub quadrature: f64,
    /// Closed-form vs. integrated channel state, entrywise.
    pub channel_state: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        trace: 1e-9,
        hermiticity: 1e-9,
        psd: 1e-9,
        evolve_min_eigenvalue: 1e-8,
        richardson: 1e-8,
        jacobi_offdiag: 1e-12,
        two_path: 1e-6,
        quadrature: 1e-9,
        channel_state: 1e-8,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
