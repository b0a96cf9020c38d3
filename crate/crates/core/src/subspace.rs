//! Subspace algebra over `C^d`: supports, sums, intersections, relative
//! orthogonal complements, projectors and principal angles.
//!
//! A [`Subspace`] is an orthonormal basis stored as matrix columns. The zero
//! subspace is an ordinary value with no columns.
//!
//! Sums, intersections and relative complements are all read off the same
//! principal-vector decomposition (singular decomposition of `B1^dagger B2`),
//! so that for fixed tolerances
//! `dim(S1 + S2) + dim(S1 ∩ S2) = dim S1 + dim S2` holds exactly.

use crate::error::{Error, Result};
use crate::linalg::{
    complete_basis, eig_hermitian, orthonormalize, svd, ComplexMatrix, HermitianOperator,
};

/// Eigenvalues at most `rank_tol * lambda_max` count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Principal cosines within this of 1 count as shared directions, within this
/// of 0 as orthogonal ones.
pub const DEFAULT_ANGLE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: ComplexMatrix,
}

/// Principal vectors of an ordered pair `(S, T)`.
///
/// `cosines[j]` pairs `left[:, j]` (in `S`) with `right[:, j]` (in `T`),
/// sorted descending. The right vectors cover all of `T`: directions of `T`
/// beyond `dim S` carry cosine 0.
struct PrincipalPairs {
    cosines: Vec<f64>,
    left: ComplexMatrix,
    /// Coordinates of the right principal vectors in `T`'s basis.
    right_coords: ComplexMatrix,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: ComplexMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: ComplexMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Span of arbitrary columns; residuals below `tol` are dropped.
    pub fn span(vectors: &ComplexMatrix, tol: f64) -> Self {
        Self {
            basis: orthonormalize(vectors, tol),
        }
    }

    /// Wraps columns that are already orthonormal.
    pub(crate) fn from_orthonormal(basis: ComplexMatrix) -> Self {
        debug_assert!(crate::linalg::orthonormality_defect(&basis) < 1e-8);
        Self { basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    fn check_ambient(&self, other: &Subspace) -> Result<()> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: other.ambient_dim(),
            });
        }
        Ok(())
    }

    /// Span of the eigenvectors of `p` whose eigenvalue exceeds
    /// `rank_tol * lambda_max`.
    pub fn support(p: &HermitianOperator, rank_tol: f64) -> Result<Self> {
        let d = p.dim();
        if p.max_abs() == 0.0 {
            return Ok(Self::zero(d));
        }
        let eig = eig_hermitian(p)?;
        let lo = eig.min().unwrap_or(0.0);
        let hi = eig.max().unwrap_or(0.0);
        let scale = hi.max(lo.abs());
        if lo < -rank_tol * scale {
            return Err(Error::NotPsd { min_eigenvalue: lo });
        }
        let threshold = rank_tol * scale;
        Ok(Self {
            basis: eig.select(|lam| lam > threshold),
        })
    }

    fn principal_pairs(&self, other: &Subspace) -> Result<PrincipalPairs> {
        let k1 = self.dim();
        let k2 = other.dim();
        let overlap = self.basis.adjoint() * &other.basis;
        let m = k1.min(k2);
        let (cosines, left_coords, right_coords) = if m == 0 {
            (
                vec![0.0; k2],
                ComplexMatrix::zeros(k1, 0),
                ComplexMatrix::identity(k2, k2),
            )
        } else {
            // Columns of the overlap beyond min(k1, k2) have singular value 0.
            let sd = svd(&overlap)?;
            let mut cos: Vec<f64> = sd
                .singular_values
                .iter()
                .map(|c| c.clamp(0.0, 1.0))
                .collect();
            cos[m..].iter_mut().for_each(|c| *c = 0.0);
            (cos, sd.u.columns(0, m).into_owned(), sd.v)
        };
        Ok(PrincipalPairs {
            cosines,
            left: &self.basis * left_coords,
            right_coords,
        })
    }

    /// Principal angles in radians, ascending; `min(dim S1, dim S2)` of them.
    pub fn principal_angles(&self, other: &Subspace) -> Result<Vec<f64>> {
        self.check_ambient(other)?;
        if self.is_zero() || other.is_zero() {
            return Err(Error::EmptySubspace);
        }
        let m = self.dim().min(other.dim());
        let pairs = self.principal_pairs(other)?;
        Ok(pairs.cosines[..m].iter().map(|c| c.acos()).collect())
    }

    /// Largest principal cosine, 0 when either side is the zero subspace.
    pub fn max_cosine(&self, other: &Subspace) -> Result<f64> {
        self.check_ambient(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(0.0);
        }
        Ok(self.principal_pairs(other)?.cosines[0])
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.sum_with_tol(other, DEFAULT_ANGLE_TOL)
    }

    /// `S1 + S2`. Directions of `S2` within `angle_tol` (on the cosine) of
    /// `S1` are treated as already contained in it.
    pub fn sum_with_tol(&self, other: &Subspace, angle_tol: f64) -> Result<Subspace> {
        self.check_ambient(other)?;
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let pairs = self.principal_pairs(other)?;
        let right = &other.basis * &pairs.right_coords;
        let mut cols: Vec<_> = self.basis.column_iter().map(|c| c.into_owned()).collect();
        for (j, &cos) in pairs.cosines.iter().enumerate() {
            if cos >= 1.0 - angle_tol {
                continue;
            }
            let v = right.column(j).into_owned();
            let r = &v - &self.basis * (self.basis.adjoint() * &v);
            let n = r.norm();
            cols.push(r.unscale(n));
        }
        let joined = ComplexMatrix::from_columns(&cols);
        // The residuals are orthogonal in exact arithmetic; one more pass
        // cleans up rounding without dropping anything.
        let basis = orthonormalize(&joined, 0.0);
        debug_assert_eq!(basis.ncols(), cols.len());
        Ok(Subspace { basis })
    }

    /// `S1 ∩ S2`: left principal vectors whose cosine is at least
    /// `1 - angle_tol`.
    pub fn intersection(&self, other: &Subspace, angle_tol: f64) -> Result<Subspace> {
        self.check_ambient(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Subspace::zero(self.ambient_dim()));
        }
        let pairs = self.principal_pairs(other)?;
        let cols: Vec<usize> = (0..self.dim().min(other.dim()))
            .filter(|&j| pairs.cosines[j] >= 1.0 - angle_tol)
            .collect();
        Ok(Subspace {
            basis: pairs.left.select_columns(cols.iter()),
        })
    }

    /// `S⊥ ∩ T` with `self = S`: everything in `t` orthogonal to `self`.
    ///
    /// Computed inside `T` as the orthogonal complement of the projection of
    /// `S` onto `T`; directions of `T` whose principal cosine against `S` is
    /// at most `angle_tol` are kept.
    pub fn complement_within(&self, t: &Subspace, angle_tol: f64) -> Result<Subspace> {
        self.check_ambient(t)?;
        if t.is_zero() {
            return Ok(Subspace::zero(self.ambient_dim()));
        }
        if self.is_zero() {
            return Ok(t.clone());
        }
        let pairs = self.principal_pairs(t)?;
        let cols: Vec<usize> = (0..pairs.cosines.len())
            .filter(|&j| pairs.cosines[j] <= angle_tol)
            .collect();
        let coords = pairs.right_coords.select_columns(cols.iter());
        Ok(Subspace {
            basis: &t.basis * coords,
        })
    }

    pub fn orthogonal_complement(&self) -> Subspace {
        Subspace {
            basis: complete_basis(&self.basis),
        }
    }

    /// `B B^dagger`.
    pub fn projector(&self) -> HermitianOperator {
        let d = self.ambient_dim();
        if self.is_zero() {
            return HermitianOperator::zeros(d);
        }
        HermitianOperator::from_hermitian_part(&self.basis * self.basis.adjoint())
    }

    /// Coordinates of this subspace's basis inside the orthonormal `frame`,
    /// i.e. `frame^dagger B`. Meaningful when `self` lies inside `frame`.
    pub fn coordinates_in(&self, frame: &ComplexMatrix) -> Subspace {
        Subspace {
            basis: frame.adjoint() * &self.basis,
        }
    }

    /// Image under the isometry `frame` (columns orthonormal).
    pub fn embed(&self, frame: &ComplexMatrix) -> Subspace {
        Subspace {
            basis: frame * &self.basis,
        }
    }

    /// Orthogonal direct sum; the caller guarantees `self ⊥ other`.
    pub(crate) fn direct_sum(&self, other: &Subspace) -> Subspace {
        let cols: Vec<_> = self
            .basis
            .column_iter()
            .chain(other.basis.column_iter())
            .map(|c| c.into_owned())
            .collect();
        if cols.is_empty() {
            return Subspace::zero(self.ambient_dim());
        }
        Subspace {
            basis: orthonormalize(&ComplexMatrix::from_columns(&cols), 0.0),
        }
    }

    /// Largest `||(I - P_T) v||` over unit vectors `v` of `self`: zero iff
    /// `self ⊆ t`.
    pub fn containment_defect(&self, t: &Subspace) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let residual = &self.basis - &t.basis * (t.basis.adjoint() * &self.basis);
        residual.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, C64};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn span_of(d: usize, vecs: &[&[f64]]) -> Subspace {
        let mut m = ComplexMatrix::zeros(d, vecs.len());
        for (j, v) in vecs.iter().enumerate() {
            for (i, &x) in v.iter().enumerate() {
                m[(i, j)] = c(x);
            }
        }
        Subspace::span(&m, 1e-12)
    }

    fn same_span(a: &Subspace, b: &Subspace) -> bool {
        a.dim() == b.dim() && a.containment_defect(b) < 1e-10 && b.containment_defect(a) < 1e-10
    }

    const E1: &[f64] = &[1.0, 0.0, 0.0];
    const E2: &[f64] = &[0.0, 1.0, 0.0];
    const E3: &[f64] = &[0.0, 0.0, 1.0];

    #[test]
    fn supports() {
        let s = Subspace::support(
            &HermitianOperator::from_real_diagonal(&[0.5, 0.5, 0.0]),
            1e-10,
        )
        .unwrap();
        assert!(same_span(&s, &span_of(3, &[E1, E2])));
        let z = Subspace::support(&HermitianOperator::zeros(3), 1e-10).unwrap();
        assert_eq!(z.dim(), 0);
        let s = Subspace::support(
            &HermitianOperator::from_real_diagonal(&[0.999, 0.001]),
            1e-10,
        )
        .unwrap();
        assert_eq!(s.dim(), 2);
        assert!(matches!(
            Subspace::support(&HermitianOperator::from_real_diagonal(&[1.0, -0.5]), 1e-10),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn sums() {
        let s = span_of(3, &[E1]).sum(&span_of(3, &[E2])).unwrap();
        assert!(same_span(&s, &span_of(3, &[E1, E2])));
        let s = span_of(3, &[E1, E2]).sum(&span_of(3, &[E2, E3])).unwrap();
        assert_eq!(s.dim(), 3);
        let a = span_of(3, &[E1, &[0.0, 1.0, 1.0]]);
        assert!(same_span(&a.sum(&Subspace::zero(3)).unwrap(), &a));
        assert!(matches!(
            a.sum(&Subspace::zero(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn intersections() {
        let i = span_of(3, &[E1, E2])
            .intersection(&span_of(3, &[E2, E3]), 1e-8)
            .unwrap();
        assert!(same_span(&i, &span_of(3, &[E2])));
        assert!(span_of(3, &[E1])
            .intersection(&span_of(3, &[E2]), 1e-8)
            .unwrap()
            .is_zero());
        // Principal cosines of this pair are (1, 0).
        let a = span_of(3, &[E1, &[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2]]);
        let b = span_of(3, &[E1, &[0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2]]);
        let i = a.intersection(&b, 1e-8).unwrap();
        assert!(same_span(&i, &span_of(3, &[E1])));
    }

    #[test]
    fn relative_complements() {
        let r = span_of(3, &[E1])
            .complement_within(&span_of(3, &[E1, E2]), 1e-8)
            .unwrap();
        assert!(same_span(&r, &span_of(3, &[E2])));
        let r = span_of(3, &[E1, E2])
            .complement_within(&span_of(3, &[&[FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]]), 1e-8)
            .unwrap();
        assert!(r.is_zero());
        let r = span_of(3, &[E1])
            .complement_within(
                &span_of(3, &[&[FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0], E3]),
                1e-8,
            )
            .unwrap();
        assert!(same_span(&r, &span_of(3, &[E3])));
    }

    #[test]
    fn complements() {
        let r = span_of(3, &[E1]).orthogonal_complement();
        assert!(same_span(&r, &span_of(3, &[E2, E3])));
        assert_eq!(Subspace::zero(4).orthogonal_complement().dim(), 4);
        assert!(Subspace::full(4).orthogonal_complement().is_zero());
    }

    #[test]
    fn projectors() {
        let p = span_of(3, &[E1]).projector();
        assert_eq!(p, HermitianOperator::from_real_diagonal(&[1.0, 0.0, 0.0]));
        assert_eq!(Subspace::zero(3).projector(), HermitianOperator::zeros(3));
        let p = span_of(2, &[&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]]).projector();
        let expected = ComplexMatrix::from_element(2, 2, c(0.5));
        assert!(max_abs(&(p.matrix() - expected)) < 1e-15);
    }

    #[test]
    fn angles() {
        let a = span_of(3, &[E1, E2]);
        for t in a.principal_angles(&a).unwrap() {
            assert_abs_diff_eq!(t, 0.0, epsilon = 1e-7);
        }
        let t = span_of(3, &[E1])
            .principal_angles(&span_of(3, &[E2]))
            .unwrap();
        assert_abs_diff_eq!(t[0], FRAC_PI_2, epsilon = 1e-15);
        let t = span_of(2, &[&[1.0, 0.0]])
            .principal_angles(&span_of(2, &[&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]]))
            .unwrap();
        assert_abs_diff_eq!(t[0], FRAC_PI_4, epsilon = 1e-12);
        assert_eq!(
            a.principal_angles(&Subspace::zero(3)),
            Err(Error::EmptySubspace)
        );
    }
}
