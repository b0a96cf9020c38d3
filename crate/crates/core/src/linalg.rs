//! Dense complex Hermitian kernel.
//!
//! Everything downstream (supports, intersections, the reductions and the
//! oracle) is phrased in terms of the eigenstructure of small Hermitian
//! matrices, so this module stays deliberately small: a validated
//! [`HermitianOperator`], an ascending [`EigenDecomposition`], the trace
//! pairing and Gram-Schmidt orthonormalization.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Absolute tolerance on `max |H - H^dagger|` accepted at construction.
pub const HERMITIAN_TOL: f64 = 1e-10;

const EIG_MAX_SWEEPS: usize = 10_000;

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn symmetrize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// A square complex matrix equal to its conjugate transpose.
///
/// Construction checks the symmetry residual against [`HERMITIAN_TOL`] and
/// then replaces the matrix by `(H + H^dagger) / 2`, so stored values are
/// exactly Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if !is_finite(&matrix) {
            return Err(Error::NonFinite);
        }
        let residual = max_abs(&(&matrix - matrix.adjoint()));
        if residual > HERMITIAN_TOL {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self {
            matrix: symmetrize(&matrix),
        })
    }

    /// Symmetrizes without checking; for matrices Hermitian by construction.
    pub(crate) fn from_hermitian_part(matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), matrix.ncols());
        Self {
            matrix: symmetrize(&matrix),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Self {
            matrix: ComplexMatrix::from_diagonal(&d),
        }
    }

    /// The rank-one operator `|v><v|`.
    pub fn outer(v: &ComplexVector) -> Self {
        Self {
            matrix: v * v.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale(factor),
        }
    }

    /// `B^dagger H B`: the operator expressed in the coordinates of `basis`.
    pub fn compress(&self, basis: &ComplexMatrix) -> Self {
        Self::from_hermitian_part(basis.adjoint() * &self.matrix * basis)
    }

    /// `B H B^dagger`: the inverse of [`compress`](Self::compress) for an isometry `B`.
    pub fn embed(&self, basis: &ComplexMatrix) -> Self {
        Self::from_hermitian_part(basis * &self.matrix * basis.adjoint())
    }

    pub fn expectation(&self, v: &ComplexVector) -> f64 {
        (v.adjoint() * &self.matrix * v)[(0, 0)].re
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scale(rhs)
    }
}

/// Eigenpairs of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn min(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    pub fn max(&self) -> Option<f64> {
        self.eigenvalues.last().copied()
    }

    /// `V diag(f(lambda)) V^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            scaled.column_mut(j).scale_mut(w);
        }
        if n == 0 {
            return ComplexMatrix::zeros(self.eigenvectors.nrows(), self.eigenvectors.nrows());
        }
        &scaled * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|x| x)
    }

    /// Columns of the eigenvectors whose eigenvalue satisfies `keep`.
    pub fn select(&self, keep: impl Fn(f64) -> bool) -> ComplexMatrix {
        let cols: Vec<usize> = (0..self.eigenvalues.len())
            .filter(|&j| keep(self.eigenvalues[j]))
            .collect();
        self.eigenvectors.select_columns(cols.iter())
    }
}

pub fn eig_hermitian(h: &HermitianOperator) -> Result<EigenDecomposition> {
    let n = h.dim();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: Vec::new(),
            eigenvectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let eig = nalgebra::SymmetricEigen::try_new(h.matrix.clone(), f64::EPSILON, EIG_MAX_SWEEPS)
        .ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let eigenvectors = eig.eigenvectors.select_columns(order.iter());
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// True iff the smallest eigenvalue is at least `-tol * max(1, max|H_ij|)`.
pub fn is_psd(h: &HermitianOperator, tol: f64) -> Result<bool> {
    if h.dim() == 0 {
        return Ok(true);
    }
    let eig = eig_hermitian(h)?;
    let floor = -tol * h.max_abs().max(1.0);
    Ok(eig.min().unwrap_or(0.0) >= floor)
}

/// `Re Tr(AB)`.
pub fn trace_product(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (am, bm) = (a.matrix(), b.matrix());
    let n = a.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += am[(i, j)] * bm[(j, i)];
        }
    }
    debug_assert!(
        acc.im.abs() <= 1e-10 * (1.0 + acc.re.abs()),
        "Tr(AB) of Hermitian operators has imaginary part {}",
        acc.im
    );
    Ok(acc.re)
}

/// Orthonormal basis of the column span, by modified Gram-Schmidt with one
/// re-orthogonalization pass.
///
/// Columns whose residual norm after projection is at most `tol` (absolute)
/// are dropped, so dependent inputs collapse.
pub fn orthonormalize(vectors: &ComplexMatrix, tol: f64) -> ComplexMatrix {
    let rows = vectors.nrows();
    let mut kept: Vec<ComplexVector> = Vec::with_capacity(vectors.ncols());
    for col in vectors.column_iter() {
        let mut v: ComplexVector = col.into_owned();
        for _ in 0..2 {
            for q in &kept {
                let c = q.dotc(&v);
                v.axpy(-c, q, C64::new(1.0, 0.0));
            }
        }
        let norm = v.norm();
        if norm > tol {
            kept.push(v.unscale(norm));
        }
    }
    if kept.is_empty() {
        return ComplexMatrix::zeros(rows, 0);
    }
    ComplexMatrix::from_columns(&kept)
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `basis` inside `C^dim`.
pub(crate) fn complete_basis(basis: &ComplexMatrix) -> ComplexMatrix {
    let dim = basis.nrows();
    let k = basis.ncols();
    if k >= dim {
        return ComplexMatrix::zeros(dim, 0);
    }
    if k == 0 {
        return ComplexMatrix::identity(dim, dim);
    }
    // I - BB^dagger has eigenvalues 0 (k times) and 1 (dim - k times).
    let residual = ComplexMatrix::identity(dim, dim) - basis * basis.adjoint();
    let eig = eig_hermitian(&HermitianOperator::from_hermitian_part(residual))
        .expect("projector eigendecomposition");
    let cols: Vec<usize> = (k..dim).collect();
    eig.eigenvectors.select_columns(cols.iter())
}

/// `max |B^dagger B - I|`.
pub fn orthonormality_defect(basis: &ComplexMatrix) -> f64 {
    let k = basis.ncols();
    max_abs(&(basis.adjoint() * basis - ComplexMatrix::identity(k, k)))
}

/// Singular values and vectors of `M = U diag(s) V^dagger`.
#[derive(Clone, Debug)]
pub struct SingularDecomposition {
    /// One per column of `M`, descending.
    pub singular_values: Vec<f64>,
    /// `M v_j / s_j`; zero columns where `s_j = 0`.
    pub u: ComplexMatrix,
    /// Unitary, columns in singular-value order.
    pub v: ComplexMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 60;

/// One-sided Jacobi SVD: rotates column pairs of `M` until they are
/// mutually orthogonal. Small singular values come out with high relative
/// accuracy, which the principal-angle code relies on.
pub fn svd(m: &ComplexMatrix) -> Result<SingularDecomposition> {
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let n = m.ncols();
    let mut w = m.clone();
    let mut v = ComplexMatrix::identity(n, n);
    // Columns this small are zero to working precision.
    let negligible = f64::EPSILON * m.norm();
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= 4.0 * f64::EPSILON * (alpha * beta).sqrt()
                    || alpha.sqrt() <= negligible
                    || beta.sqrt() <= negligible
                {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    let cp = mat.column(p).into_owned();
                    let cq = mat.column(q) * phase;
                    mat.set_column(p, &(&cp * C64::from(c) - &cq * C64::from(s)));
                    mat.set_column(q, &(&cp * C64::from(s) + &cq * C64::from(c)));
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::ConvergenceFailure);
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut u = ComplexMatrix::zeros(m.nrows(), n);
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            u.set_column(k, &w.column(j).unscale(norms[j]));
        }
    }
    Ok(SingularDecomposition {
        singular_values: order.iter().map(|&j| norms[j]).collect(),
        u,
        v: v.select_columns(order.iter()),
    })
}
