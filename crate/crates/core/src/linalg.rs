//! Small dense complex matrices (dimension at most 4).
//!
//! Everything here is stack allocated so the quadrature loops in the weight
//! and reducing modules can call it millions of times without touching the
//! heap. Hermitian spectra come from a cyclic complex Jacobi sweep.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

pub type C64 = Complex64;

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 4;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Complex vector of length `dim <= 4`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vector {
    dim: usize,
    data: [C64; MAX_DIM],
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "vector dimension {dim}");
        Vector { dim, data: [ZERO; MAX_DIM] }
    }

    pub fn from_slice(v: &[C64]) -> Self {
        let mut out = Vector::zeros(v.len());
        out.data[..v.len()].copy_from_slice(v);
        out
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut out = Vector::zeros(dim);
        out.data[k] = ONE;
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data[..self.dim]
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data[..self.dim]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = *self;
        out.as_mut_slice().iter_mut().for_each(|z| *z *= c);
        out
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn dot(&self, other: &Vector) -> C64 {
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a.conj() * b).sum()
    }
}

/// General complex `dim x dim` matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: [C64; MAX_DIM * MAX_DIM],
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "matrix dimension {dim}");
        Matrix { dim, data: [ZERO; MAX_DIM * MAX_DIM] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_real_diag(&vec![1.0; dim])
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        let mut out = Matrix::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            out.set(i, i, C64::new(x, 0.0));
        }
        out
    }

    /// Builds from row-major rows; fails on ragged or oversized input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let m = rows.len();
        if m == 0 || m > MAX_DIM {
            return Err(Error::Dimension(m));
        }
        let mut out = Matrix::zeros(m);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Dimension(row.len()));
            }
            for (j, &z) in row.iter().enumerate() {
                out.set(i, j, z);
            }
        }
        Ok(out)
    }

    /// Rank-one `z z^*`.
    pub fn outer(z: &Vector) -> Self {
        let m = z.dim();
        let mut out = Matrix::zeros(m);
        for i in 0..m {
            for j in 0..m {
                out.set(i, j, z.data[i] * z.data[j].conj());
            }
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * MAX_DIM + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * MAX_DIM + j] = z;
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Matrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(i, j, self.get(j, i).conj());
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = *self;
        out.data.iter_mut().for_each(|z| *z *= c);
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&self, z: &Vector) -> Vector {
        debug_assert_eq!(self.dim, z.dim());
        let mut out = Vector::zeros(self.dim);
        for i in 0..self.dim {
            let mut acc = ZERO;
            for j in 0..self.dim {
                acc += self.get(i, j) * z.data[j];
            }
            out.data[i] = acc;
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        if self.dim == 1 {
            return self.get(0, 0).norm();
        }
        if self.dim == 2 {
            let t: f64 = self.data.iter().map(|z| z.norm_sqr()).sum();
            let det = (self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0)).norm();
            let disc = (t * t - 4.0 * det * det).max(0.0).sqrt();
            return (0.5 * (t + disc)).sqrt();
        }
        let gram = HermitianMatrix::hermitize(&(self.adjoint() * *self));
        gram.max_eigenvalue().max(0.0).sqrt()
    }
}

impl Mul for Matrix {
    type Output = Matrix;
    fn mul(self, rhs: Matrix) -> Matrix {
        debug_assert_eq!(self.dim, rhs.dim);
        let m = self.dim;
        let mut out = Matrix::zeros(m);
        for i in 0..m {
            for k in 0..m {
                let a = self.get(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..m {
                    out.data[i * MAX_DIM + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }
}

impl Add for Matrix {
    type Output = Matrix;
    fn add(self, rhs: Matrix) -> Matrix {
        let mut out = self;
        out.data.iter_mut().zip(rhs.data.iter()).for_each(|(a, b)| *a += b);
        out
    }
}

impl Sub for Matrix {
    type Output = Matrix;
    fn sub(self, rhs: Matrix) -> Matrix {
        let mut out = self;
        out.data.iter_mut().zip(rhs.data.iter()).for_each(|(a, b)| *a -= b);
        out
    }
}

/// Hermitian matrix; the constructor enforces the symmetry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HermitianMatrix(Matrix);

impl HermitianMatrix {
    /// Accepts `a` if it is Hermitian to within `1e-10` relative, and
    /// symmetrizes away the residual.
    pub fn new(a: Matrix) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::Precondition("non-finite matrix entry".into()));
        }
        let defect = (a - a.adjoint()).frobenius();
        if defect > 1e-10 * a.frobenius().max(1e-300) {
            return Err(Error::Precondition(format!("matrix is not Hermitian (defect {defect:e})")));
        }
        Ok(Self::hermitize(&a))
    }

    /// `(a + a^*) / 2`, no checks.
    pub fn hermitize(a: &Matrix) -> Self {
        let mut out = (*a + a.adjoint()).scale(0.5);
        for i in 0..out.dim {
            let d = out.get(i, i);
            out.set(i, i, C64::new(d.re, 0.0));
        }
        HermitianMatrix(out)
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix(Matrix::identity(dim))
    }

    pub fn from_real_diag(d: &[f64]) -> Self {
        HermitianMatrix(Matrix::from_real_diag(d))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn eigen(&self) -> Eigen {
        jacobi_eigen(&self.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        if self.dim() == 1 {
            return self.0.get(0, 0).re;
        }
        let e = self.eigen();
        e.values[self.dim() - 1]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 1 {
            return self.0.get(0, 0).re;
        }
        self.eigen().values[0]
    }
}

/// Eigenvalues ascending, eigenvectors as the columns of `vectors`.
#[derive(Clone, Copy, Debug)]
pub struct Eigen {
    pub values: [f64; MAX_DIM],
    pub vectors: Matrix,
}

impl Eigen {
    /// `U f(diag) U^*`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let m = self.vectors.dim;
        let mut out = Matrix::zeros(m);
        for k in 0..m {
            let fk = f(self.values[k]);
            for i in 0..m {
                let uik = self.vectors.get(i, k) * fk;
                for j in 0..m {
                    out.data[i * MAX_DIM + j] += uik * self.vectors.get(j, k).conj();
                }
            }
        }
        out
    }
}

fn jacobi_eigen(a: &Matrix) -> Eigen {
    let m = a.dim;
    let mut h = *a;
    let mut v = Matrix::identity(m);
    let scale = a.frobenius().max(1e-300);
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                off += h.get(i, j).norm_sqr();
            }
        }
        if off.sqrt() <= 1e-16 * scale {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let hpq = h.get(p, q);
                let mag = hpq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                // Phase the (p,q) block real, then apply a real rotation.
                let phase = hpq / mag;
                let app = h.get(p, p).re;
                let aqq = h.get(q, q).re;
                let theta = (aqq - app) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Column block of U: u_pp = c, u_pq = s, u_qp = -s*conj(phase), u_qq = c*conj(phase)
                let up_p = C64::new(c, 0.0);
                let up_q = C64::new(s, 0.0);
                let uq_p = -phase.conj() * s;
                let uq_q = phase.conj() * c;
                // H <- H U
                for i in 0..m {
                    let hip = h.get(i, p);
                    let hiq = h.get(i, q);
                    h.set(i, p, hip * up_p + hiq * uq_p);
                    h.set(i, q, hip * up_q + hiq * uq_q);
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, vip * up_p + viq * uq_p);
                    v.set(i, q, vip * up_q + viq * uq_q);
                }
                // H <- U^* H
                for j in 0..m {
                    let hpj = h.get(p, j);
                    let hqj = h.get(q, j);
                    h.set(p, j, up_p.conj() * hpj + uq_p.conj() * hqj);
                    h.set(q, j, up_q.conj() * hpj + uq_q.conj() * hqj);
                }
                h.set(p, q, ZERO);
                h.set(q, p, ZERO);
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| h.get(i, i).re.total_cmp(&h.get(j, j).re));
    let mut values = [0.0; MAX_DIM];
    let mut vectors = Matrix::zeros(m);
    for (new, &old) in order.iter().enumerate() {
        values[new] = h.get(old, old).re;
        for i in 0..m {
            vectors.set(i, new, v.get(i, old));
        }
    }
    Eigen { values, vectors }
}

/// Default positivity tolerance: `1e-12 * trace`.
pub fn default_tolerance(h: &HermitianMatrix) -> f64 {
    1e-12 * h.matrix().trace().re.abs()
}

/// True iff the smallest eigenvalue exceeds `tol`.
pub fn is_positive_definite(h: &HermitianMatrix, tol: f64) -> bool {
    h.min_eigenvalue() > tol
}

/// Hermitian positive-definite matrix together with its spectral data.
#[derive(Clone, Copy, Debug)]
pub struct PositiveMatrix {
    base: HermitianMatrix,
    eig: Eigen,
}

impl PartialEq for PositiveMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
    }
}

impl PositiveMatrix {
    /// Checks positivity against [`default_tolerance`].
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let tol = default_tolerance(&h);
        Self::with_tolerance(h, tol)
    }

    pub fn with_tolerance(h: HermitianMatrix, tol: f64) -> Result<Self> {
        let eig = h.eigen();
        let min = eig.values[0];
        if !(min > tol) {
            return Err(Error::DegenerateMatrix { min_eigenvalue: min, tol });
        }
        Ok(PositiveMatrix { base: h, eig })
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    /// `c I` for `c > 0`.
    pub fn scalar(dim: usize, c: f64) -> Self {
        assert!(c > 0.0, "scalar multiple must be positive");
        let mut values = [0.0; MAX_DIM];
        values[..dim].iter_mut().for_each(|v| *v = c);
        PositiveMatrix {
            base: HermitianMatrix::from_real_diag(&vec![c; dim]),
            eig: Eigen { values, vectors: Matrix::identity(dim) },
        }
    }

    /// `U diag(values) U^*` for unitary `U`; no eigen solve.
    pub fn from_spectrum(vectors: Matrix, values: &[f64]) -> Result<Self> {
        let m = vectors.dim();
        let mut vals = [0.0; MAX_DIM];
        vals[..m].copy_from_slice(values);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        let mut e = Eigen { values: [0.0; MAX_DIM], vectors: Matrix::zeros(m) };
        for (new, &old) in order.iter().enumerate() {
            e.values[new] = vals[old];
            for i in 0..m {
                e.vectors.set(i, new, vectors.get(i, old));
            }
        }
        let base = HermitianMatrix::hermitize(&e.reassemble(|x| x));
        let tol = 1e-12 * values.iter().sum::<f64>().abs();
        if !(e.values[0] > tol) {
            return Err(Error::DegenerateMatrix { min_eigenvalue: e.values[0], tol });
        }
        Ok(PositiveMatrix { base, eig: e })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.base
    }

    pub fn matrix(&self) -> &Matrix {
        self.base.matrix()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values[..self.dim()]
    }

    pub fn eigen(&self) -> &Eigen {
        &self.eig
    }

    /// `P^alpha` as a general matrix (cheaper than [`matrix_power`]).
    pub fn power_matrix(&self, alpha: f64) -> Matrix {
        if alpha == 1.0 {
            return *self.matrix();
        }
        self.eig.reassemble(|x| x.powf(alpha))
    }

    pub fn inverse(&self) -> Matrix {
        self.power_matrix(-1.0)
    }

    /// Largest eigenvalue.
    pub fn op_norm(&self) -> f64 {
        self.eig.values[self.dim() - 1]
    }

    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0);
        let mut out = *self;
        out.base = HermitianMatrix(self.base.0.scale(c));
        out.eig.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Random positive matrix with spectrum log-uniform in `[1, max_cond]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_cond: f64) -> Self {
        let u = random_unitary(rng, dim);
        let values: Vec<f64> = (0..dim).map(|_| max_cond.powf(rng.gen::<f64>())).collect();
        Self::from_spectrum(u, &values).expect("random spectrum is positive")
    }
}

/// `P^alpha = U diag(lambda^alpha) U^*`.
pub fn matrix_power(p: &PositiveMatrix, alpha: f64) -> Result<PositiveMatrix> {
    if alpha == 1.0 {
        return Ok(*p);
    }
    let m = p.dim();
    let values: Vec<f64> = p.eigenvalues().iter().map(|x| x.powf(alpha)).collect();
    let e = Eigen {
        values: {
            let mut v = [0.0; MAX_DIM];
            v[..m].copy_from_slice(&values);
            if alpha < 0.0 {
                v[..m].reverse();
            }
            v
        },
        vectors: {
            let mut u = p.eig.vectors;
            if alpha < 0.0 {
                for i in 0..m {
                    for k in 0..m {
                        u.set(i, k, p.eig.vectors.get(i, m - 1 - k));
                    }
                }
            }
            u
        },
    };
    if !(e.values[0] > 0.0) || !e.values[..m].iter().all(|v| v.is_finite()) {
        return Err(Error::DegenerateMatrix { min_eigenvalue: e.values[0], tol: 0.0 });
    }
    let base = HermitianMatrix::hermitize(&e.reassemble(|x| x));
    Ok(PositiveMatrix { base, eig: e })
}

/// Largest singular value of any square matrix.
pub fn op_norm(a: &Matrix) -> f64 {
    a.op_norm()
}

/// Haar-ish unitary from Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Matrix {
    let mut cols: Vec<Vector> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v = Vector::zeros(dim);
        for z in v.as_mut_slice() {
            *z = C64::new(gaussian(rng), gaussian(rng));
        }
        for c in &cols {
            let proj = c.dot(&v);
            for i in 0..dim {
                v.data[i] -= proj * c.data[i];
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v.scale(C64::new(1.0 / n, 0.0)));
        }
    }
    let mut u = Matrix::zeros(dim);
    for (k, c) in cols.iter().enumerate() {
        for i in 0..dim {
            u.set(i, k, c.data[i]);
        }
    }
    u
}

pub(crate) fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Serialized form: row-major `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&Matrix> for MatrixRecord {
    fn from(a: &Matrix) -> Self {
        let mut entries = Vec::with_capacity(a.dim * a.dim);
        for i in 0..a.dim {
            for j in 0..a.dim {
                let z = a.get(i, j);
                entries.push([z.re, z.im]);
            }
        }
        MatrixRecord { dim: a.dim, entries }
    }
}

impl TryFrom<&MatrixRecord> for Matrix {
    type Error = Error;
    fn try_from(r: &MatrixRecord) -> Result<Self> {
        if r.dim == 0 || r.dim > MAX_DIM || r.entries.len() != r.dim * r.dim {
            return Err(Error::Format(format!("bad matrix record of dim {}", r.dim)));
        }
        let mut out = Matrix::zeros(r.dim);
        for (idx, e) in r.entries.iter().enumerate() {
            out.set(idx / r.dim, idx % r.dim, C64::new(e[0], e[1]));
        }
        Ok(out)
    }
}
