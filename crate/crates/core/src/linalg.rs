//! Dense complex Hermitian matrices and their eigendecomposition.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Entrywise tolerance for the Hermitian invariant.
pub const HERMITIAN_TOL: f64 = 1e-12;

const EIGEN_MAX_ITER: usize = 10_000;

/// A square complex matrix known to equal its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Wraps `m` after checking `m[i][j] = conj(m[j][i])` within `HERMITIAN_TOL`.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::ContractViolation(format!(
                "matrix is {}x{}, expected non-empty square",
                m.nrows(),
                m.ncols()
            )));
        }
        let dev = hermitian_deviation(&m);
        if dev > tol {
            return Err(Error::ContractViolation(format!(
                "matrix is not Hermitian (max |m_ij - conj(m_ji)| = {dev:e})"
            )));
        }
        Ok(Self(m))
    }

    /// Skips the check; callers build `m` Hermitian by construction.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        debug_assert!(hermitian_deviation(&m) <= HERMITIAN_TOL);
        Self(m)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> DVector<Complex64> {
        self.vectors.column(k).into_owned()
    }
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Householder tridiagonalization followed by implicit QR (nalgebra), then
/// sorted ascending. Non-convergence is reported with the iteration budget.
pub fn hermitian_eigensolve(h: &HermitianMatrix) -> Result<Eigen> {
    let dim = h.dim();
    let m = h.as_matrix().clone();
    let eig = m
        .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::EigenNoConvergence {
            dim,
            iterations: EIGEN_MAX_ITER,
        })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(dim, dim, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(Eigen { values, vectors })
}

/// Smallest eigenvalue only; used for positivity monitoring.
pub fn min_eigenvalue(h: &HermitianMatrix) -> Result<f64> {
    let dim = h.dim();
    let eig = h
        .as_matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::EigenNoConvergence {
            dim,
            iterations: EIGEN_MAX_ITER,
        })?;
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Frobenius norm, used as the scale for eigen residuals.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
