//! Seeded random problems with a prescribed support geometry.
//!
//! The supports are assembled from orthonormal blocks of a Haar-random
//! unitary: a shared block of dimension `common`, a block of `S_rho1` that is
//! orthogonal to `S_rho2` and vice versa, and `general` directions of
//! `S_rho2` that sit at principal angles strictly between 0 and pi/2 to as
//! many directions of `S_rho1`. Angles are kept away from both ends so the
//! shape survives the default tolerances.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::eig_hermitian;
use crate::linalg::{ComplexMatrix, ComplexVector, HermitianOperator, C64};
use crate::problem::{DensityMatrix, DiscriminationProblem, Povm, Tolerances};
use crate::puresolver::PureStatePair;
use crate::subspace::Subspace;

const MIN_ANGLE: f64 = 0.15;
const MAX_ANGLE: f64 = 1.4;
const MIN_EIGENVALUE: f64 = 0.1;
const MIN_PRIOR: f64 = 0.05;

/// Support geometry of a random two-state problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub dim: usize,
    pub ranks: (usize, usize),
    /// `dim(S_rho1 ∩ S_rho2)`.
    pub common: usize,
    /// Directions of each support that overlap the other support without
    /// lying in it. The rest of `S_rho1` beyond `common + general` is
    /// orthogonal to `S_rho2`, and likewise for `S_rho2`.
    pub general: usize,
}

impl Shape {
    /// Supports in general position apart from the shared block: the smaller
    /// remainder has no part orthogonal to the other support.
    pub fn generic(dim: usize, r1: usize, r2: usize, common: usize) -> Result<Self> {
        let general = r1.min(r2).saturating_sub(common);
        Self::new(dim, r1, r2, common, general)
    }

    pub fn new(dim: usize, r1: usize, r2: usize, common: usize, general: usize) -> Result<Self> {
        let shape = Self {
            dim,
            ranks: (r1, r2),
            common,
            general,
        };
        if r1 == 0 || r2 == 0 {
            return Err(Error::InfeasibleShape(format!(
                "ranks ({r1}, {r2}) must be positive"
            )));
        }
        if common > r1.min(r2) {
            return Err(Error::InfeasibleShape(format!(
                "common dimension {common} exceeds min rank {}",
                r1.min(r2)
            )));
        }
        if common + general > r1.min(r2) {
            return Err(Error::InfeasibleShape(format!(
                "common + general = {} exceeds min rank {}",
                common + general,
                r1.min(r2)
            )));
        }
        if r1 + r2 - common > dim {
            return Err(Error::InfeasibleShape(format!(
                "r1 + r2 - common = {} exceeds dimension {dim}",
                r1 + r2 - common
            )));
        }
        Ok(shape)
    }

    /// `dim(S_rho2 ∩ S_rho1^perp)`.
    pub fn orthogonal1(&self) -> usize {
        self.ranks.1 - self.common - self.general
    }

    /// `dim(S_rho1 ∩ S_rho2^perp)`.
    pub fn orthogonal2(&self) -> usize {
        self.ranks.0 - self.common - self.general
    }

    pub fn joint_dim(&self) -> usize {
        self.ranks.0 + self.ranks.1 - self.common
    }
}

pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    if n == 0 {
        return ComplexMatrix::zeros(0, 0);
    }
    let qr = complex_gaussian(n, n, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Random density matrix whose support is exactly the span of the orthonormal
/// columns of `basis`; eigenvalues are bounded away from zero.
pub fn random_density<R: Rng + ?Sized>(basis: &ComplexMatrix, rng: &mut R) -> DensityMatrix {
    let r = basis.ncols();
    let mut w: Vec<f64> = (0..r)
        .map(|_| rng.random_range(MIN_EIGENVALUE..1.0))
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    let v = basis * random_unitary(r, rng);
    let core = HermitianOperator::from_real_diagonal(&w);
    DensityMatrix::unchecked(core.embed(&v))
}

pub fn random_prior<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(MIN_PRIOR..1.0 - MIN_PRIOR)
}

/// Orthonormal bases `(B1, B2)` of two supports with the given shape.
pub fn random_supports<R: Rng + ?Sized>(
    shape: &Shape,
    rng: &mut R,
) -> (ComplexMatrix, ComplexMatrix) {
    let d = shape.dim;
    let w = random_unitary(d, rng);
    let (c, g) = (shape.common, shape.general);
    let (o1, o2) = (shape.orthogonal1(), shape.orthogonal2());
    let mut next = 0;
    let mut take = |k: usize| {
        let block = w.columns(next, k).into_owned();
        next += k;
        block
    };
    let common = take(c);
    let only1 = take(o2);
    let only2 = take(o1);
    let g1 = take(g);
    let fresh = take(g);
    // Pair each direction of g1 with one of `fresh` and tilt by theta_j.
    let g1 = &g1 * random_unitary(g, rng);
    let fresh = &fresh * random_unitary(g, rng);
    let mut g2 = ComplexMatrix::zeros(d, g);
    for j in 0..g {
        let theta: f64 = rng.random_range(MIN_ANGLE..MAX_ANGLE);
        let phase = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        let col = g1.column(j) * C64::from(theta.cos()) + fresh.column(j) * (phase * theta.sin());
        g2.set_column(j, &col);
    }
    let b1 = hstack(&[&common, &only1, &g1]);
    let b2 = hstack(&[&common, &only2, &g2]);
    (b1, b2)
}

fn hstack(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

pub fn random_problem<R: Rng + ?Sized>(shape: &Shape, rng: &mut R) -> DiscriminationProblem {
    let (b1, b2) = random_supports(shape, rng);
    let rho1 = random_density(&b1, rng);
    let rho2 = random_density(&b2, rng);
    let p1 = random_prior(rng);
    DiscriminationProblem::pair(rho1, rho2, p1, 1.0 - p1)
        .expect("generated states share a dimension")
}

/// Two pure states in `C^dim` with `|<psi1|psi2>| = s`, rotated by a random
/// unitary and carrying random phases.
pub fn random_pure_pair<R: Rng + ?Sized>(
    dim: usize,
    s: f64,
    p1: f64,
    rng: &mut R,
) -> Result<PureStatePair> {
    if dim < 2 && s < 1.0 {
        return Err(Error::InfeasibleShape(
            "two distinct pure states need dim >= 2".into(),
        ));
    }
    let w = random_unitary(dim, rng);
    let phase = |rng: &mut R| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    let psi1: ComplexVector = w.column(0) * phase(rng);
    let mut psi2: ComplexVector = w.column(0) * (phase(rng) * s);
    if dim > 1 {
        psi2 += w.column(1) * (phase(rng) * (1.0 - s * s).max(0.0).sqrt());
    }
    let n1 = psi1.norm();
    let n2 = psi2.norm();
    PureStatePair::new(psi1.unscale(n1), psi2.unscale(n2), p1, 1.0 - p1)
}

/// A random unambiguous measurement: each `F_k` is a random positive
/// operator on the orthogonal complement of the other states' supports, and
/// all of them are scaled by a common factor so that `F_?` stays positive.
pub fn random_usd_povm<R: Rng + ?Sized>(
    p: &DiscriminationProblem,
    tol: &Tolerances,
    rng: &mut R,
) -> Result<Povm> {
    let d = p.ambient_dim();
    let supports = p.supports(tol.rank)?;
    let mut fs = Vec::with_capacity(p.num_states());
    for k in 0..p.num_states() {
        let mut others = Subspace::zero(d);
        for (j, s) in supports.iter().enumerate() {
            if j != k {
                others = others.sum_with_tol(s, tol.angle)?;
            }
        }
        let allowed = others.orthogonal_complement();
        let a = complex_gaussian(allowed.dim(), allowed.dim(), rng);
        let core = HermitianOperator::from_hermitian_part(&a * a.adjoint());
        fs.push(core.embed(allowed.basis()));
    }
    let total = fs
        .iter()
        .fold(HermitianOperator::zeros(d), |acc, f| &acc + f);
    let top = eig_hermitian(&total)?.max().unwrap_or(0.0);
    let scale = if top > 0.0 {
        rng.random_range(0.05..1.0) / top
    } else {
        0.0
    };
    let fs: Vec<HermitianOperator> = fs.into_iter().map(|f| f.scale(scale)).collect();
    let fq = &HermitianOperator::identity(d) - &total.scale(scale);
    Povm::new(fs, fq)
}
