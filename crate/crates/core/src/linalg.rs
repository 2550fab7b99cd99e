//! Dense complex linear algebra.
//!
//! [`ComplexMatrix`] stores entries in row-major order and is the carrier for
//! every operator, state and gate in the crate. Products and Hermitian
//! eigendecompositions are delegated to `faer`; everything else is plain loops.
//!
//! Every exponential needed by the protocol has the form `exp(s * H)` with `H`
//! Hermitian and `s` a complex scalar, so [`expm`] goes through the spectral
//! decomposition. An [`EigenSystem`] can be kept around and re-exponentiated
//! for a whole grid of scalars.
//!
//! Composite system-ancilla operators use the ordering `system ⊗ ancilla`
//! throughout: joint index `s * dim_a + a`.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use faer::complex_native::c64;
use faer::{Mat, MatRef, Parallelism, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative tolerance applied to the Hermiticity precondition of [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Below this many multiply-adds the naive triple loop beats the faer call overhead.
const SMALL_PRODUCT: usize = 4096;

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries; fails unless `rows * cols == data.len()`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Convenience constructor for small literal matrices.
    ///
    /// # Panics
    /// If the rows are ragged.
    pub fn from_rows<R: AsRef<[Complex64]>>(rows: &[R]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * m);
        for r in rows {
            assert_eq!(r.as_ref().len(), m, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: n,
            cols: m,
            data,
        }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = Complex64::new(d, 0.0);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * z).collect(),
        }
    }

    pub fn scale_real(&self, x: f64) -> Self {
        self.scale(Complex64::new(x, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        self.diagonal().into_iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `|M - M^H|_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `|U^H U - 1|_F`.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.adjoint() * self - Self::identity(self.rows)).frobenius_norm()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius distance `|self - other|_F`.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Copy of the `rows x cols` sub-block starting at `(row0, col0)`.
    pub fn block(&self, row0: usize, col0: usize, rows: usize, cols: usize) -> Self {
        assert!(row0 + rows <= self.rows && col0 + cols <= self.cols);
        Self::from_fn(rows, cols, |i, j| self[(row0 + i, col0 + j)])
    }

    /// Leading `n x n` block, i.e. the compression onto the first `n` basis states.
    pub fn leading_block(&self, n: usize) -> Self {
        self.block(0, 0, n, n)
    }

    /// `U M U^H`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        &(u * self) * &u.adjoint()
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        self * other - other * self
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        if self.rows * self.cols * rhs.cols <= SMALL_PRODUCT {
            let mut out = Self::zeros(self.rows, rhs.cols);
            for i in 0..self.rows {
                for k in 0..self.cols {
                    let a = self.data[i * self.cols + k];
                    if a == ZERO {
                        continue;
                    }
                    let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                    let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                    for (d, &b) in dst.iter_mut().zip(row) {
                        *d += a * b;
                    }
                }
            }
            return out;
        }
        let lhs = self.to_faer();
        let rhs_f = rhs.to_faer();
        let mut acc = Mat::<c64>::zeros(self.rows, rhs.cols);
        faer::linalg::matmul::matmul(
            acc.as_mut(),
            lhs.as_ref(),
            rhs_f.as_ref(),
            None,
            c64::new(1.0, 0.0),
            Parallelism::None,
        );
        Self::from_faer(acc.as_ref())
    }

    /// `Tr(A B)` without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> Complex64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self.data[i * self.cols + j] * other.data[j * other.cols + i];
            }
        }
        acc
    }

    /// Multiplies column `j` by `factors[j]`, i.e. `M * diag(factors)`.
    pub fn scale_columns(&self, factors: &[Complex64]) -> Self {
        assert_eq!(factors.len(), self.cols);
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.cols) {
            for (x, f) in row.iter_mut().zip(factors) {
                *x *= f;
            }
        }
        out
    }

    fn to_faer(&self) -> Mat<c64> {
        Mat::from_fn(self.rows, self.cols, |i, j| {
            let z = self.data[i * self.cols + j];
            c64::new(z.re, z.im)
        })
    }

    fn from_faer(m: MatRef<'_, c64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| {
            let z = m.read(i, j);
            Complex64::new(z.re, z.im)
        })
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        self.matmul(&rhs)
    }
}

macro_rules! elementwise {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr for &ComplexMatrix {
            type Output = ComplexMatrix;

            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
                ComplexMatrix {
                    rows: self.rows,
                    cols: self.cols,
                    data: self.data.iter().zip(&rhs.data).map(|(a, b)| a $op b).collect(),
                }
            }
        }

        impl $tr for ComplexMatrix {
            type Output = ComplexMatrix;

            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                (&self).$method(&rhs)
            }
        }
    };
}

elementwise!(Add, add, +);
elementwise!(Sub, sub, -);

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// Spectral decomposition `M = V diag(λ) V^H` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns; unitary.
    pub eigenvectors: ComplexMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(f(λ)) V^H`.
    pub fn spectral_map(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let weights: Vec<Complex64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        &self.eigenvectors.scale_columns(&weights) * &self.eigenvectors.adjoint()
    }

    /// `exp(scale * M)`.
    pub fn exp(&self, scale: Complex64) -> ComplexMatrix {
        self.spectral_map(|l| (scale * l).exp())
    }

    /// `|M V - V diag(λ)|_F` against the original matrix.
    pub fn residual(&self, m: &ComplexMatrix) -> f64 {
        let lambda: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&l| Complex64::new(l, 0.0))
            .collect();
        (m * &self.eigenvectors - self.eigenvectors.scale_columns(&lambda)).frobenius_norm()
    }
}

fn check_hermitian(m: &ComplexMatrix, rel_tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let norm = m.frobenius_norm();
    let residual = m.hermiticity_residual();
    if !(residual <= rel_tol * norm) {
        return Err(Error::NotHermitian { residual, norm });
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<EigenSystem> {
    check_hermitian(m, HERMITIAN_TOL)?;
    let n = m.rows();
    if n == 0 {
        return Ok(EigenSystem {
            eigenvalues: Vec::new(),
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let evd = m.to_faer().selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();
    let mut order: Vec<usize> = (0..n).collect();
    let values: Vec<f64> = (0..n).map(|i| s.read(i).re).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence { dim: n });
    }
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| {
        let z = u.read(i, order[j]);
        Complex64::new(z.re, z.im)
    });
    if eigenvectors.as_slice().iter().any(|z| !z.is_finite()) {
        return Err(Error::NoConvergence { dim: n });
    }
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

/// `exp(scale * M)` for Hermitian `M` and any complex `scale`.
pub fn expm(m: &ComplexMatrix, scale: Complex64) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(m)?.exp(scale))
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (p, q) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * p, a.cols() * q, |r, c| {
        a[(r / p, c / q)] * b[(r % p, c % q)]
    })
}

fn check_bipartite(m: &ComplexMatrix, dim_s: usize, dim_a: usize) -> Result<()> {
    let d = dim_s * dim_a;
    if m.rows() != d || m.cols() != d {
        return Err(Error::DimensionMismatch(format!(
            "partial trace over {dim_s}x{dim_a} needs a {d}x{d} matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

/// `Tr_A`: traces out the ancilla factor, leaving a `dim_s x dim_s` operator.
pub fn partial_trace_ancilla(m: &ComplexMatrix, dim_s: usize, dim_a: usize) -> Result<ComplexMatrix> {
    check_bipartite(m, dim_s, dim_a)?;
    Ok(ComplexMatrix::from_fn(dim_s, dim_s, |i, j| {
        (0..dim_a).map(|a| m[(i * dim_a + a, j * dim_a + a)]).sum()
    }))
}

/// `Tr_S`: traces out the system factor, leaving a `dim_a x dim_a` operator.
pub fn partial_trace_system(m: &ComplexMatrix, dim_s: usize, dim_a: usize) -> Result<ComplexMatrix> {
    check_bipartite(m, dim_s, dim_a)?;
    Ok(ComplexMatrix::from_fn(dim_a, dim_a, |a, b| {
        (0..dim_s).map(|s| m[(s * dim_a + a, s * dim_a + b)]).sum()
    }))
}

/// `min_θ |A - e^{iθ} B|_F`.
///
/// Equal to `sqrt(|A|² + |B|² - 2|Tr(A^H B)|)`. The minimizing phase is
/// `arg Tr(B^H A)`, and the norm is evaluated at that phase directly so the
/// result keeps full precision near zero.
pub fn distance_up_to_phase(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    let overlap: Complex64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| y.conj() * x)
        .sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - phase * y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Pauli and projector matrices on a qubit.
pub mod qubit {
    use super::*;

    pub fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn sigma_y() -> ComplexMatrix {
        let i = Complex64::i();
        ComplexMatrix::from_rows(&[[ZERO, -i], [i, ZERO]])
    }

    pub fn sigma_z() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    /// `|0><0|`.
    pub fn proj0() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, 0.0])
    }

    /// `|1><1|`.
    pub fn proj1() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[0.0, 1.0])
    }
}
