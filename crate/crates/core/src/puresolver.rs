//! Closed-form optimal unambiguous discrimination of two pure states.
//!
//! With overlap `s = |<psi1|psi2>|` the optimal per-state failure rates
//! `(q1, q2)` satisfy `q1 q2 = s^2`. In the interior regime
//! `s <= sqrt(p1/p2) <= 1/s` they are `q1 = s sqrt(p2/p1)`,
//! `q2 = s sqrt(p1/p2)`, giving `Q = 2 sqrt(p1 p2) s`. Outside it one state is
//! never identified: for `sqrt(p1/p2) < s` only state 2 is (`Q = p1 + p2 s^2`),
//! and symmetrically.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, ComplexVector, HermitianOperator};
use crate::problem::{DensityMatrix, DiscriminationProblem, Povm, Tolerances};

const UNIT_TOL: f64 = 1e-10;
/// Overlaps within this of 0 (or 1) are treated as orthogonal (identical).
const OVERLAP_EDGE_TOL: f64 = 1e-12;
const REGIME_EDGE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct PureStatePair {
    psi1: ComplexVector,
    psi2: ComplexVector,
    p1: f64,
    p2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    Interior,
    /// State 1 is never identified; the measurement projects onto `psi1^perp`.
    BoundaryState1,
    /// State 2 is never identified.
    BoundaryState2,
    Orthogonal,
    Identical,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub q_opt: f64,
    pub povm: Povm,
    pub regime: Regime,
}

impl PureStatePair {
    pub fn new(psi1: ComplexVector, psi2: ComplexVector, p1: f64, p2: f64) -> Result<Self> {
        if psi1.len() != psi2.len() || psi1.is_empty() {
            return Err(Error::InvalidPair(format!(
                "vector lengths {} and {}",
                psi1.len(),
                psi2.len()
            )));
        }
        for (i, v) in [&psi1, &psi2].iter().enumerate() {
            if (v.norm() - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidPair(format!(
                    "psi{} has norm {}",
                    i + 1,
                    v.norm()
                )));
            }
        }
        if !(p1 >= 0.0 && p2 >= 0.0) || (p1 + p2 - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidPair(format!("priors ({p1}, {p2})")));
        }
        Ok(Self { psi1, psi2, p1, p2 })
    }

    /// Reads a pair of rank-one states off a two-state problem.
    pub fn from_problem(p: &DiscriminationProblem, tol: &Tolerances) -> Result<Self> {
        if p.num_states() != 2 {
            return Err(Error::InvalidPair(format!("{} states", p.num_states())));
        }
        let ranks = p.ranks(tol.rank)?;
        if ranks != [1, 1] {
            return Err(Error::InvalidPair(format!("ranks {ranks:?}, need (1, 1)")));
        }
        let top = |op: &HermitianOperator| -> Result<ComplexVector> {
            let eig = eig_hermitian(op)?;
            let last = eig.eigenvalues.len() - 1;
            Ok(eig.eigenvectors.column(last).into_owned())
        };
        Self::new(top(p.state(0))?, top(p.state(1))?, p.prior(0), p.prior(1))
    }

    pub fn psi1(&self) -> &ComplexVector {
        &self.psi1
    }

    pub fn psi2(&self) -> &ComplexVector {
        &self.psi2
    }

    pub fn priors(&self) -> (f64, f64) {
        (self.p1, self.p2)
    }

    pub fn overlap(&self) -> f64 {
        self.psi1.dotc(&self.psi2).norm().min(1.0)
    }

    pub fn swapped(&self) -> Self {
        Self {
            psi1: self.psi2.clone(),
            psi2: self.psi1.clone(),
            p1: self.p2,
            p2: self.p1,
        }
    }

    pub fn to_problem(&self) -> DiscriminationProblem {
        DiscriminationProblem::pair(
            DensityMatrix::pure(&self.psi1),
            DensityMatrix::pure(&self.psi2),
            self.p1,
            self.p2,
        )
        .expect("pair of equal-length states")
    }

    pub fn regime(&self) -> Regime {
        let s = self.overlap();
        if s <= OVERLAP_EDGE_TOL {
            Regime::Orthogonal
        } else if s >= 1.0 - OVERLAP_EDGE_TOL {
            Regime::Identical
        } else if self.p1 < s * s * self.p2 {
            Regime::BoundaryState1
        } else if self.p2 < s * s * self.p1 {
            Regime::BoundaryState2
        } else {
            Regime::Interior
        }
    }

    /// Per-state failure rates `(q1, q2)` of the optimal measurement in `regime`.
    fn failure_rates(&self, regime: Regime) -> (f64, f64) {
        let s = self.overlap();
        match regime {
            Regime::Orthogonal => (0.0, 0.0),
            Regime::Identical => (1.0, 1.0),
            Regime::BoundaryState1 => (1.0, s * s),
            Regime::BoundaryState2 => (s * s, 1.0),
            Regime::Interior => {
                let r = (self.p1 / self.p2).sqrt();
                (s / r, s * r)
            }
        }
    }

    fn consistent_with(&self, requested: Regime) -> bool {
        let actual = self.regime();
        if requested == actual {
            return true;
        }
        let s2 = self.overlap().powi(2);
        let near1 = (self.p1 - s2 * self.p2).abs() <= REGIME_EDGE_TOL;
        let near2 = (self.p2 - s2 * self.p1).abs() <= REGIME_EDGE_TOL;
        matches!(
            (requested, actual),
            (Regime::Interior, Regime::BoundaryState1)
                | (Regime::BoundaryState1, Regime::Interior)
                if near1
        ) || matches!(
            (requested, actual),
            (Regime::Interior, Regime::BoundaryState2)
                | (Regime::BoundaryState2, Regime::Interior)
                if near2
        )
    }
}

/// Unit vector along the part of `v` orthogonal to `w`.
fn orthogonal_part(v: &ComplexVector, w: &ComplexVector) -> ComplexVector {
    let r = v - w * w.dotc(v);
    let n = r.norm();
    r.unscale(n)
}

/// `F_1 = a |psi2^perp><psi2^perp|`, `F_2 = b |psi1^perp><psi1^perp|` with
/// weights chosen so that `Tr(rho_i F_i) = 1 - q_i`, and `F_? = I - F_1 - F_2`.
pub fn build_pure_povm(pair: &PureStatePair, regime: Regime) -> Result<Povm> {
    if !pair.consistent_with(regime) {
        return Err(Error::RegimeMismatch {
            requested: regime.to_string(),
            actual: pair.regime().to_string(),
        });
    }
    let d = pair.psi1.len();
    let identity = HermitianOperator::identity(d);
    let (f1, f2) = match regime {
        Regime::Identical => (HermitianOperator::zeros(d), HermitianOperator::zeros(d)),
        Regime::Orthogonal => (
            HermitianOperator::outer(&orthogonal_part(&pair.psi1, &pair.psi2)),
            HermitianOperator::outer(&orthogonal_part(&pair.psi2, &pair.psi1)),
        ),
        _ => {
            let s = pair.overlap();
            let (q1, q2) = pair.failure_rates(regime);
            let gap = 1.0 - s * s;
            let w1 = ((1.0 - q1) / gap).clamp(0.0, 1.0);
            let w2 = ((1.0 - q2) / gap).clamp(0.0, 1.0);
            (
                &HermitianOperator::outer(&orthogonal_part(&pair.psi1, &pair.psi2)) * w1,
                &HermitianOperator::outer(&orthogonal_part(&pair.psi2, &pair.psi1)) * w2,
            )
        }
    };
    let fq = &(&identity - &f1) - &f2;
    Povm::new(vec![f1, f2], fq)
}

pub fn closed_form_failure(pair: &PureStatePair) -> f64 {
    let (q1, q2) = pair.failure_rates(pair.regime());
    pair.p1 * q1 + pair.p2 * q2
}

pub fn solve_two_pure(pair: &PureStatePair) -> Result<SolveReport> {
    let regime = pair.regime();
    let povm = build_pure_povm(pair, regime)?;
    Ok(SolveReport {
        q_opt: closed_form_failure(pair),
        povm,
        regime,
    })
}
