//! Quadrature rules for averages over the Bloch sphere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A node on the unit sphere with its normalized weight (weights sum to 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    pub theta: f64,
    pub phi: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Quadrature {
    /// The six axis points +-x, +-y, +-z with weight 1/6. Exact for
    /// polynomials of degree <= 3 in the direction vector.
    #[default]
    Octahedral6,
    /// Gauss-Legendre in cos(theta) times the periodic trapezoid rule in phi.
    Dense { n_theta: usize, n_phi: usize },
}

impl Quadrature {
    pub fn points(&self) -> Result<Vec<SpherePoint>> {
        match *self {
            Quadrature::Octahedral6 => Ok(octahedral()),
            Quadrature::Dense { n_theta, n_phi } => dense(n_theta, n_phi),
        }
    }
}

fn octahedral() -> Vec<SpherePoint> {
    let w = 1.0 / 6.0;
    [(0.0, 0.0), (PI, 0.0), (PI / 2.0, 0.0), (PI / 2.0, PI), (PI / 2.0, PI / 2.0), (PI / 2.0, 3.0 * PI / 2.0)]
        .into_iter()
        .map(|(theta, phi)| SpherePoint { theta, phi, weight: w })
        .collect()
}

fn dense(n_theta: usize, n_phi: usize) -> Result<Vec<SpherePoint>> {
    if n_theta == 0 || n_phi == 0 {
        return Err(Error::InvalidParameter("dense quadrature needs at least one node per axis".into()));
    }
    let (nodes, weights) = gauss_legendre(n_theta);
    let mut pts = Vec::with_capacity(n_theta * n_phi);
    for (x, w) in nodes.iter().zip(&weights) {
        let theta = x.clamp(-1.0, 1.0).acos();
        for j in 0..n_phi {
            let phi = 2.0 * PI * j as f64 / n_phi as f64;
            pts.push(SpherePoint { theta, phi, weight: 0.5 * w / n_phi as f64 });
        }
    }
    Ok(pts)
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))`
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(q: Quadrature, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        q.points()
            .unwrap()
            .iter()
            .map(|p| {
                let (s, c) = p.theta.sin_cos();
                p.weight * f(s * p.phi.cos(), s * p.phi.sin(), c)
            })
            .sum()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(5);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact to degree 9
        let i8: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert!((i8 - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_one() {
        for q in [Quadrature::Octahedral6, Quadrature::Dense { n_theta: 7, n_phi: 9 }] {
            assert!((integrate(q, |_, _, _| 1.0) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn second_moments_are_one_third() {
        for q in [Quadrature::Octahedral6, Quadrature::Dense { n_theta: 16, n_phi: 32 }] {
            assert!((integrate(q, |x, _, _| x * x) - 1.0 / 3.0).abs() < 1e-14);
            assert!((integrate(q, |_, y, _| y * y) - 1.0 / 3.0).abs() < 1e-14);
            assert!((integrate(q, |_, _, z| z * z) - 1.0 / 3.0).abs() < 1e-14);
            assert!(integrate(q, |x, y, z| x * y + y * z + z).abs() < 1e-14);
        }
    }

    #[test]
    fn dense_rejects_empty_grid() {
        assert!(Quadrature::Dense { n_theta: 0, n_phi: 4 }.points().is_err());
    }
}
