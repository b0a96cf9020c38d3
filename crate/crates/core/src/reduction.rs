//! Reduction of a two-state problem to the equal-rank standard form.
//!
//! Two elementary steps are available, each of which projects both states
//! onto a retained subspace `H'` and records how the failure probability of
//! the smaller problem composes back into the original one:
//!
//! * [`common_subspace_reduce`] removes the intersection of the supports.
//!   Nothing inside it can be identified unambiguously, so it contributes
//!   `(1 - N1) p1 + (1 - N2) p2` to the failure probability outright.
//! * [`orthogonal_split_reduce`] removes the parts of each support that are
//!   orthogonal to the other support. Those are identified without error and
//!   only rescale the failure probability by `N = N1 p1 + N2 p2`.
//!
//! [`reduce_to_standard_form`] restricts to the joint support and alternates
//! the two until neither applies, producing a [`ReductionTrace`] that can lift
//! any reduced measurement back to the original space.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianOperator};
use crate::problem::{
    is_usd_povm, validate_problem, CaseLabel, DensityMatrix, DiscriminationProblem, Povm,
    Tolerances,
};
use crate::subspace::Subspace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StepKind {
    CommonSubspace,
    OrthogonalSplit,
}

/// One applied reduction, expressed in the coordinates of its input problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionStep {
    pub kind: StepKind,
    /// `[H_cap]` for a common-subspace step; `[S1_perp, S2_perp]` for an
    /// orthogonal split, where `S1_perp = S_rho1^perp ∩ S_rho2` and
    /// `S2_perp = S_rho2^perp ∩ S_rho1`.
    pub removed: Vec<Subspace>,
    /// `H'`; its basis is the isometry from the reduced space into the input.
    pub retained: Subspace,
    pub n1: f64,
    pub n2: f64,
    pub q_offset: f64,
    pub q_scale: f64,
}

impl ReductionStep {
    pub fn input_dim(&self) -> usize {
        self.retained.ambient_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.retained.dim()
    }

    pub fn retained_basis(&self) -> &ComplexMatrix {
        self.retained.basis()
    }

    /// `q_offset + q_scale * q`.
    pub fn compose(&self, q: f64) -> f64 {
        self.q_offset + self.q_scale * q
    }
}

fn require_pair(p: &DiscriminationProblem) -> Result<()> {
    if p.num_states() != 2 {
        return Err(Error::InvalidProblem(format!(
            "pairwise reduction needs exactly 2 states, got {}",
            p.num_states()
        )));
    }
    Ok(())
}

/// Weights `N_i = Tr(rho_i P_H')` and states `P_H' rho_i P_H' / N_i` in the
/// basis of `retained`. A state with no weight left becomes the zero operator.
pub(crate) fn project_onto(
    p: &DiscriminationProblem,
    retained: &Subspace,
    tol: &Tolerances,
) -> (Vec<f64>, Vec<DensityMatrix>) {
    let basis = retained.basis();
    let mut weights = Vec::with_capacity(p.num_states());
    let mut states = Vec::with_capacity(p.num_states());
    for s in p.states() {
        let c = s.operator().compress(basis);
        let n = c.trace().clamp(0.0, 1.0);
        if n <= tol.rank {
            weights.push(0.0);
            states.push(DensityMatrix::unchecked(HermitianOperator::zeros(
                retained.dim(),
            )));
        } else {
            weights.push(n);
            states.push(DensityMatrix::unchecked(c.scale(1.0 / n)));
        }
    }
    (weights, states)
}

/// Priors `N_i p_i / N`; when `N = 0` the reduced problem carries no weight
/// and the original priors are kept.
pub(crate) fn renormalized_priors(priors: &[f64], weights: &[f64]) -> (Vec<f64>, f64) {
    let total: f64 = priors.iter().zip(weights).map(|(p, n)| p * n).sum();
    if total > 0.0 {
        (
            priors
                .iter()
                .zip(weights)
                .map(|(p, n)| p * n / total)
                .collect(),
            total,
        )
    } else {
        (priors.to_vec(), 0.0)
    }
}

fn apply_step(
    p: &DiscriminationProblem,
    kind: StepKind,
    removed: Vec<Subspace>,
    retained: Subspace,
    tol: &Tolerances,
) -> Result<(DiscriminationProblem, ReductionStep)> {
    let (weights, states) = project_onto(p, &retained, tol);
    let (priors, q_scale) = renormalized_priors(p.priors(), &weights);
    let q_offset = match kind {
        StepKind::CommonSubspace => p
            .priors()
            .iter()
            .zip(&weights)
            .map(|(pi, n)| (1.0 - n) * pi)
            .sum(),
        StepKind::OrthogonalSplit => 0.0,
    };
    let reduced = DiscriminationProblem::new(states, priors)?;
    let step = ReductionStep {
        kind,
        removed,
        retained,
        n1: weights[0],
        n2: weights[1],
        q_offset,
        q_scale,
    };
    Ok((reduced, step))
}

/// Splits off `H_cap = S_rho1 ∩ S_rho2`. Returns `None` when the supports
/// share no direction.
pub fn common_subspace_reduce(
    p: &DiscriminationProblem,
    tol: &Tolerances,
) -> Result<Option<(DiscriminationProblem, ReductionStep)>> {
    require_pair(p)?;
    let s = p.supports(tol.rank)?;
    let cap = s[0].intersection(&s[1], tol.angle)?;
    if cap.is_zero() {
        return Ok(None);
    }
    let joint = s[0].sum_with_tol(&s[1], tol.angle)?;
    let retained = cap.complement_within(&joint, tol.angle)?;
    apply_step(p, StepKind::CommonSubspace, vec![cap], retained, tol).map(Some)
}

/// Splits off `S1_perp ⊕ S2_perp`. Returns `None` when both relative
/// complements are empty; fails if the supports still intersect.
pub fn orthogonal_split_reduce(
    p: &DiscriminationProblem,
    tol: &Tolerances,
) -> Result<Option<(DiscriminationProblem, ReductionStep)>> {
    require_pair(p)?;
    let s = p.supports(tol.rank)?;
    let cap = s[0].intersection(&s[1], tol.angle)?;
    if !cap.is_zero() {
        return Err(Error::CommonSubspacePresent { dim: cap.dim() });
    }
    let perp1 = s[0].complement_within(&s[1], tol.angle)?;
    let perp2 = s[1].complement_within(&s[0], tol.angle)?;
    if perp1.is_zero() && perp2.is_zero() {
        return Ok(None);
    }
    let joint = s[0].sum_with_tol(&s[1], tol.angle)?;
    let split = perp1.direct_sum(&perp2);
    let retained = split.complement_within(&joint, tol.angle)?;
    apply_step(
        p,
        StepKind::OrthogonalSplit,
        vec![perp1, perp2],
        retained,
        tol,
    )
    .map(Some)
}

/// Shape of a two-state problem relative to the standard form
/// `r + r = 2r`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StandardFormReport {
    pub ranks: (usize, usize),
    pub ambient_dim: usize,
    pub joint_dim: usize,
    pub intersection_dim: usize,
    pub complement_dims: (usize, usize),
}

impl StandardFormReport {
    pub fn of(p: &DiscriminationProblem, tol: &Tolerances) -> Result<Self> {
        require_pair(p)?;
        let s = p.supports(tol.rank)?;
        Ok(Self {
            ranks: (s[0].dim(), s[1].dim()),
            ambient_dim: p.ambient_dim(),
            joint_dim: s[0].sum_with_tol(&s[1], tol.angle)?.dim(),
            intersection_dim: s[0].intersection(&s[1], tol.angle)?.dim(),
            complement_dims: (
                s[0].complement_within(&s[1], tol.angle)?.dim(),
                s[1].complement_within(&s[0], tol.angle)?.dim(),
            ),
        })
    }

    pub fn is_zero_dimensional(&self) -> bool {
        self.ambient_dim == 0
    }

    pub fn is_standard(&self) -> bool {
        if self.is_zero_dimensional() {
            return true;
        }
        let (r1, r2) = self.ranks;
        r1 == r2
            && r1 > 0
            && self.joint_dim == 2 * r1
            && self.ambient_dim == self.joint_dim
            && self.intersection_dim == 0
            && self.complement_dims == (0, 0)
    }

    pub fn label(&self) -> CaseLabel {
        CaseLabel {
            ranks: vec![self.ranks.0, self.ranks.1],
            dim: self.joint_dim,
        }
    }
}

/// The full record of a reduction: joint-support restriction, the ordered
/// steps and the resulting standard-form problem.
#[derive(Clone, Debug)]
pub struct ReductionTrace {
    pub original: DiscriminationProblem,
    /// Orthonormal basis of the joint support in the original space.
    pub support: Subspace,
    pub steps: Vec<ReductionStep>,
    pub final_problem: DiscriminationProblem,
    pub tolerances: Tolerances,
}

/// Restricts to the joint support, then applies the common-subspace and the
/// orthogonal-split reductions until neither changes the problem.
pub fn reduce_to_standard_form(
    p: &DiscriminationProblem,
    tol: &Tolerances,
) -> Result<ReductionTrace> {
    require_pair(p)?;
    let report = validate_problem(p, tol);
    if !report.is_valid() {
        let msg = report
            .failures()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::InvalidProblem(msg));
    }
    let support = p.joint_support(tol)?;
    let mut current = p.compressed(support.basis());
    let mut steps = Vec::new();
    // Every step removes at least one dimension.
    while current.ambient_dim() > 0 {
        if let Some((next, step)) = common_subspace_reduce(&current, tol)? {
            steps.push(step);
            current = next;
            continue;
        }
        match orthogonal_split_reduce(&current, tol)? {
            Some((next, step)) => {
                steps.push(step);
                current = next;
            }
            None => break,
        }
    }
    Ok(ReductionTrace {
        original: p.clone(),
        support,
        steps,
        final_problem: current,
        tolerances: *tol,
    })
}

impl ReductionTrace {
    /// Folds `q <- q_offset + q_scale * q` through the steps, last to first.
    pub fn compose_failure(&self, q_final: f64) -> f64 {
        self.steps.iter().rev().fold(q_final, |q, s| s.compose(q))
    }

    pub fn final_report(&self) -> Result<StandardFormReport> {
        StandardFormReport::of(&self.final_problem, &self.tolerances)
    }

    /// Isometry from the final problem's space into the original space.
    pub fn retained_isometry(&self) -> ComplexMatrix {
        self.steps
            .iter()
            .fold(self.support.basis().clone(), |acc, s| {
                acc * s.retained_basis()
            })
    }

    /// Measurement on the final problem's space lifted to the original one.
    ///
    /// Walking the steps backwards, each embeds the operators through its
    /// retained basis, then adds the projector onto the common subspace to
    /// `F_?`, or the projector onto `S2_perp` to `F_1` and onto `S1_perp` to
    /// `F_2`. Finally `F_?` absorbs everything outside the joint support.
    pub fn lift_povm(&self, reduced: &Povm) -> Result<Povm> {
        let d_final = self.final_problem.ambient_dim();
        if reduced.dim() != d_final || reduced.conclusive.len() != 2 {
            return Err(Error::NotUsdOnReduced(format!(
                "expected 2 conclusive elements on a {d_final}-dimensional space"
            )));
        }
        if d_final > 0 {
            let check = is_usd_povm(&self.final_problem, reduced, self.tolerances.usd);
            if !check.is_usd {
                return Err(Error::NotUsdOnReduced(check.failures.join("; ")));
            }
        }
        let mut f1 = reduced.conclusive[0].clone();
        let mut f2 = reduced.conclusive[1].clone();
        let mut fq = reduced.inconclusive.clone();
        for step in self.steps.iter().rev() {
            let v = step.retained_basis();
            f1 = f1.embed(v);
            f2 = f2.embed(v);
            fq = fq.embed(v);
            match step.kind {
                StepKind::CommonSubspace => {
                    fq = &fq + &step.removed[0].projector();
                }
                StepKind::OrthogonalSplit => {
                    f1 = &f1 + &step.removed[1].projector();
                    f2 = &f2 + &step.removed[0].projector();
                }
            }
        }
        let j = self.support.basis();
        let outside = self.support.orthogonal_complement().projector();
        Povm::new(vec![f1.embed(j), f2.embed(j)], &fq.embed(j) + &outside)
    }
}
