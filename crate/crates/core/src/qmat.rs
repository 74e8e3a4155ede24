//! Dense complex matrices at the fixed dimensions 2, 4 and 8, density
//! matrices, and the single-qubit operator constants.
//!
//! Basis convention: `|0>` is the first basis vector and `sigma_z |0> = +|0>`.
//! Multi-qubit states use the Kronecker order `|q0 q1 ...>`, qubit 0 being the
//! most significant, so two qubits are ordered `|00>, |01>, |10>, |11>`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

const MAX_JACOBI_SWEEPS: usize = 64;

fn check_dim(dim: usize) -> Result<()> {
    match dim {
        2 | 4 | 8 => Ok(()),
        d => Err(Error::UnsupportedDimension(d)),
    }
}

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, data: vec![ZERO; dim * dim] })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        Ok(m)
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be a
    /// supported `dim * dim`.
    pub fn from_row_major(entries: Vec<C64>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim * dim != entries.len() {
            return Err(Error::InvalidParameter(format!("{} entries do not form a square matrix", entries.len())));
        }
        check_dim(dim)?;
        Ok(Self { dim, data: entries })
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Result<Self> {
        Self::from_row_major(rows.iter().flatten().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diagonal(values: &[C64]) -> Result<Self> {
        let mut m = Self::zeros(values.len())?;
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        Ok(m)
    }

    /// `|v><v|` for a column vector `v`.
    pub fn outer(v: &[C64]) -> Result<Self> {
        let n = v.len();
        check_dim(n)?;
        let mut data = Vec::with_capacity(n * n);
        for a in v {
            for b in v {
                data.push(a * b.conj());
            }
        }
        Ok(Self { dim: n, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn scale(&self, k: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|x| x * k).collect() }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|x| x * k).collect() }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = self.data[j * n + i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        self.same_dim(rhs)?;
        Ok(self.mul_unchecked(rhs))
    }

    pub(crate) fn mul_unchecked(&self, rhs: &Self) -> Self {
        let n = self.dim;
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        Self { dim: n, data }
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.same_dim(rhs)?;
        Ok(self.zip_with(rhs, |a, b| a + b))
    }

    pub fn try_sub(&self, rhs: &Self) -> Result<Self> {
        self.same_dim(rhs)?;
        Ok(self.zip_with(rhs, |a, b| a - b))
    }

    /// `[self, rhs] = self*rhs - rhs*self`
    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        Ok(self.try_mul(rhs)?.zip_with(&rhs.mul_unchecked(self), |a, b| a - b))
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(*a, *b)).collect() }
    }

    fn same_dim(&self, rhs: &Self) -> Result<()> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: rhs.dim });
        }
        Ok(())
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!(self.dim, rhs.dim, "max_abs_diff on mismatched dimensions");
        self.data.iter().zip(&rhs.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Entrywise max |A - A^dagger|.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        worst
    }

    /// Sum of absolute row sums: an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        let n = self.dim;
        (0..n).map(|i| (0..n).map(|j| self.data[i * n + j].norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Applies the matrix to a column vector.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        let n = self.dim;
        Ok((0..n).map(|i| (0..n).map(|j| self.data[i * n + j] * v[j]).sum()).collect())
    }

    /// `<v| self |v>`
    pub fn expectation(&self, v: &[C64]) -> Result<C64> {
        let av = self.apply(v)?;
        Ok(v.iter().zip(&av).map(|(a, b)| a.conj() * b).sum())
    }

    pub(crate) fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

// Operator impls panic on dimension mismatch, like slices do on bad indices;
// the `try_*` methods are the fallible forms.
impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_mul(rhs).expect("matrix product dimension mismatch")
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_add(rhs).expect("matrix sum dimension mismatch")
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_sub(rhs).expect("matrix difference dimension mismatch")
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Pauli matrix `sigma^n`; `n = 0` is the identity.
pub fn pauli(n: usize) -> Result<ComplexMatrix> {
    let entries = match n {
        0 => [ONE, ZERO, ZERO, ONE],
        1 => [ZERO, ONE, ONE, ZERO],
        2 => [ZERO, -I, I, ZERO],
        3 => [ONE, ZERO, ZERO, -ONE],
        _ => return Err(Error::IndexOutOfRange { what: "Pauli", index: n }),
    };
    ComplexMatrix::from_row_major(entries.to_vec())
}

/// `sigma^+ = (sigma^1 + i sigma^2)/2`, which maps `|1> -> |0>`.
pub fn sigma_plus() -> ComplexMatrix {
    let x = pauli(1).unwrap();
    let y = pauli(2).unwrap();
    (&x + &y.scale(I)).scale_real(0.5)
}

/// `sigma^- = (sigma^1 - i sigma^2)/2`, which maps `|0> -> |1>`.
pub fn sigma_minus() -> ComplexMatrix {
    let x = pauli(1).unwrap();
    let y = pauli(2).unwrap();
    (&x - &y.scale(I)).scale_real(0.5)
}

/// Kronecker product; the result may not exceed dimension 8.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    if n > 8 {
        return Err(Error::UnsupportedDimension(n));
    }
    let mut out = ComplexMatrix::zeros(n)?;
    for i in 0..na {
        for j in 0..na {
            let aij = a[(i, j)];
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k, j * nb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Traces out every qubit not listed in `keep` (0-based, qubit 0 most
/// significant). The kept qubits retain their relative order.
pub fn partial_trace(m: &ComplexMatrix, keep: &[usize]) -> Result<ComplexMatrix> {
    let n_qubits = m.dim.trailing_zeros() as usize;
    if keep.is_empty() {
        return Err(Error::InvalidSubsystems("nothing kept".into()));
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != keep.len() {
        return Err(Error::InvalidSubsystems(format!("duplicate qubit in {keep:?}")));
    }
    if let Some(&q) = sorted.iter().find(|&&q| q >= n_qubits) {
        return Err(Error::InvalidSubsystems(format!("qubit {q} does not exist in a {n_qubits}-qubit operator")));
    }
    let traced: Vec<usize> = (0..n_qubits).filter(|q| !sorted.contains(q)).collect();
    let bit = |q: usize| 1usize << (n_qubits - 1 - q);
    // Scatter an index over a subset of qubits into a full basis index.
    let spread = |bits: usize, qubits: &[usize]| -> usize {
        qubits.iter().enumerate().filter(|(k, _)| bits & (1 << (qubits.len() - 1 - k)) != 0).map(|(_, &q)| bit(q)).sum()
    };
    let out_dim = 1usize << sorted.len();
    let mut out = ComplexMatrix::zeros(out_dim)?;
    for r in 0..out_dim {
        let row_base = spread(r, &sorted);
        for c in 0..out_dim {
            let col_base = spread(c, &sorted);
            let mut acc = ZERO;
            for e in 0..(1usize << traced.len()) {
                let env = spread(e, &traced);
                acc += m[(row_base | env, col_base | env)];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(out)
}

/// Eigenvalues of a Hermitian matrix in ascending order, by cyclic complex
/// Jacobi rotations.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    hermitian_eigenvalues_with(m, &Tolerances::DEFAULT)
}

pub fn hermitian_eigenvalues_with(m: &ComplexMatrix, tol: &Tolerances) -> Result<Vec<f64>> {
    let herm = m.hermiticity_error();
    if herm > tol.hermiticity {
        return Err(Error::NotHermitian(herm));
    }
    let n = m.dim;
    let mut a = m.clone();
    // Symmetrize so the rotations act on an exactly Hermitian matrix.
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off_norm(&a) > tol.jacobi_offdiag {
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::NoConvergence(sweeps));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, p, q);
            }
        }
        sweeps += 1;
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// One rotation `A <- U^dagger A U` zeroing the (p, q) element.
fn jacobi_rotate(a: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let n = a.dim;
    let phase = apq / r;
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
    let t = if theta == 0.0 { 1.0 } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // U = diag(1, conj(phase)) * [[c, s], [-s, c]] on the (p, q) block.
    let u_qp = -conj_scaled(phase, s);
    let u_qq = conj_scaled(phase, c);
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c + akq * u_qp;
        a[(k, q)] = akp * s + akq * u_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c + aqk * u_qp.conj();
        a[(q, k)] = apk * s + aqk * u_qq.conj();
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
}

fn conj_scaled(z: C64, k: f64) -> C64 {
    z.conj() * k
}

/// A validated density matrix: unit trace, Hermitian and positive
/// semidefinite within [`Tolerances`].
#[derive(Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::DEFAULT)
    }

    pub fn with_tolerances(matrix: ComplexMatrix, tol: &Tolerances) -> Result<Self> {
        let tr = matrix.trace();
        if (tr - ONE).norm() > tol.trace {
            return Err(Error::NotDensityMatrix(format!("trace {tr}")));
        }
        let herm = matrix.hermiticity_error();
        if herm > tol.hermiticity {
            return Err(Error::NotDensityMatrix(format!("hermiticity error {herm:e}")));
        }
        let min_eig = hermitian_eigenvalues_with(&matrix, tol)?[0];
        if min_eig < -tol.psd {
            return Err(Error::NotDensityMatrix(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix the caller has constructed to be a valid state.
    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// Pure state `|psi><psi|`; `psi` is normalized here.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self { matrix: ComplexMatrix::outer(&v)? })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Ok(Self { matrix: ComplexMatrix::identity(dim)?.scale_real(1.0 / dim as f64) })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        Ok(Self { matrix: partial_trace(&self.matrix, keep)? })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(&self.matrix)
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Density{:?}", self.matrix)
    }
}

impl Index<(usize, usize)> for DensityMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.matrix[idx]
    }
}
