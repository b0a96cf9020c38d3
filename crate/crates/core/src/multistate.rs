//! Pairwise reduction of problems with `N >= 2` states.
//!
//! Each state `rho_i` is compared against the mixture of all the others.
//! Directions shared by `rho_i` and that mixture can never be identified and
//! are removed from every state; directions of `rho_i` orthogonal to all the
//! other states are identified perfectly and removed from `rho_i` alone.
//! The converse split, of the mixture against `rho_i`, is not available: the
//! mixture is not a state that can be measured on its own.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianOperator};
use crate::problem::{
    is_usd_povm, validate_problem, DensityMatrix, DiscriminationProblem, Povm, Tolerances,
};
use crate::reduction::{project_onto, renormalized_priors};
use crate::subspace::Subspace;

/// `rho_i` against the normalized mixture of the remaining states.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseView {
    pub index: usize,
    pub rho_tilde1: DensityMatrix,
    pub rho_tilde2: DensityMatrix,
    pub p_tilde1: f64,
    pub p_tilde2: f64,
}

impl PairwiseView {
    pub fn to_problem(&self) -> Result<DiscriminationProblem> {
        DiscriminationProblem::pair(
            self.rho_tilde1.clone(),
            self.rho_tilde2.clone(),
            self.p_tilde1,
            self.p_tilde2,
        )
    }
}

pub fn build_pairwise_view(p: &DiscriminationProblem, i: usize) -> Result<PairwiseView> {
    let n = p.num_states();
    if i >= n {
        return Err(Error::InvalidProblem(format!(
            "state index {i} out of range for {n} states"
        )));
    }
    let pi = p.prior(i);
    let rest = 1.0 - pi;
    if rest <= f64::EPSILON {
        return Err(Error::DegeneratePrior { index: i });
    }
    let mut mix = HermitianOperator::zeros(p.ambient_dim());
    for j in (0..n).filter(|&j| j != i) {
        mix = &mix + &p.state(j).scale(p.prior(j) / rest);
    }
    Ok(PairwiseView {
        index: i,
        rho_tilde1: p.states()[i].clone(),
        rho_tilde2: DensityMatrix::unchecked(mix),
        p_tilde1: pi,
        p_tilde2: rest,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum NStateStepKind {
    /// `S_rho_i ∩ S_rho~2` removed from every state.
    CommonSubspace { state: usize },
    /// `S_rho~2^perp ∩ S_rho_i` assigned to `F_i`.
    Identified { state: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NStateStep {
    pub kind: NStateStepKind,
    /// The removed subspace, in the coordinates of the step's input.
    pub removed: Subspace,
    pub retained: Subspace,
    /// `N_j = Tr(rho_j P_H')` for every state.
    pub weights: Vec<f64>,
    pub q_offset: f64,
    pub q_scale: f64,
}

impl NStateStep {
    pub fn compose(&self, q: f64) -> f64 {
        self.q_offset + self.q_scale * q
    }
}

#[derive(Clone, Debug)]
pub struct NStateReduction {
    pub original: DiscriminationProblem,
    pub support: Subspace,
    pub steps: Vec<NStateStep>,
    /// Full passes over the states, the last of which changed nothing.
    pub passes: usize,
    pub final_problem: DiscriminationProblem,
    pub tolerances: Tolerances,
}

/// Sum of the supports of every state except `i`. For positive priors this
/// is the support of the mixture `rho~2`.
fn others_support(supports: &[Subspace], i: usize, angle_tol: f64) -> Result<Subspace> {
    let mut acc = Subspace::zero(supports[i].ambient_dim());
    for (j, s) in supports.iter().enumerate() {
        if j != i {
            acc = acc.sum_with_tol(s, angle_tol)?;
        }
    }
    Ok(acc)
}

fn apply(
    p: &DiscriminationProblem,
    kind: NStateStepKind,
    removed: Subspace,
    joint: &Subspace,
    tol: &Tolerances,
) -> Result<(DiscriminationProblem, NStateStep)> {
    let retained = removed.complement_within(joint, tol.angle)?;
    let (weights, states) = project_onto(p, &retained, tol);
    let (priors, q_scale) = renormalized_priors(p.priors(), &weights);
    let q_offset = match kind {
        NStateStepKind::CommonSubspace { .. } => p
            .priors()
            .iter()
            .zip(&weights)
            .map(|(pi, n)| (1.0 - n) * pi)
            .sum(),
        NStateStepKind::Identified { .. } => 0.0,
    };
    let reduced = DiscriminationProblem::new(states, priors)?;
    Ok((
        reduced,
        NStateStep {
            kind,
            removed,
            retained,
            weights,
            q_offset,
            q_scale,
        },
    ))
}

/// One rule application for state `i`, if either rule applies.
fn reduce_once(
    p: &DiscriminationProblem,
    i: usize,
    tol: &Tolerances,
) -> Result<Option<(DiscriminationProblem, NStateStep)>> {
    let supports = p.supports(tol.rank)?;
    let own = &supports[i];
    if own.is_zero() {
        return Ok(None);
    }
    let others = others_support(&supports, i, tol.angle)?;
    let joint = others.sum_with_tol(own, tol.angle)?;
    let cap = own.intersection(&others, tol.angle)?;
    if !cap.is_zero() {
        return apply(
            p,
            NStateStepKind::CommonSubspace { state: i },
            cap,
            &joint,
            tol,
        )
        .map(Some);
    }
    let alone = others.complement_within(own, tol.angle)?;
    if !alone.is_zero() {
        return apply(
            p,
            NStateStepKind::Identified { state: i },
            alone,
            &joint,
            tol,
        )
        .map(Some);
    }
    Ok(None)
}

/// Restricts to the joint support, then sweeps `i = 1..N` applying the
/// common-subspace rule or else the one-sided split until a whole pass
/// changes nothing.
pub fn nstate_reduce(p: &DiscriminationProblem, tol: &Tolerances) -> Result<NStateReduction> {
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
    let mut passes = 0;
    loop {
        passes += 1;
        let mut changed = false;
        for i in 0..current.num_states() {
            if let Some((next, step)) = reduce_once(&current, i, tol)? {
                steps.push(step);
                current = next;
                changed = true;
            }
        }
        if !changed || current.ambient_dim() == 0 {
            break;
        }
    }
    Ok(NStateReduction {
        original: p.clone(),
        support,
        steps,
        passes,
        final_problem: current,
        tolerances: *tol,
    })
}

impl NStateReduction {
    pub fn compose_failure(&self, q_final: f64) -> f64 {
        self.steps.iter().rev().fold(q_final, |q, s| s.compose(q))
    }

    /// Isometry from the final problem's space into the original space.
    pub fn retained_isometry(&self) -> ComplexMatrix {
        self.steps
            .iter()
            .fold(self.support.basis().clone(), |acc, s| {
                acc * s.retained.basis()
            })
    }

    pub fn retained_subspace(&self) -> Subspace {
        Subspace::from_orthonormal(self.retained_isometry())
    }

    /// Subspaces assigned to each `F_i`, in the original coordinates.
    pub fn identified_subspaces(&self) -> Vec<(usize, Subspace)> {
        let mut frame = self.support.basis().clone();
        let mut out = Vec::new();
        for step in &self.steps {
            if let NStateStepKind::Identified { state } = step.kind {
                out.push((state, step.removed.embed(&frame)));
            }
            frame = frame * step.retained.basis();
        }
        out
    }

    /// Embeds a measurement of the final problem, adds the projector onto
    /// every removed common subspace to `F_?` and every identified subspace
    /// to its `F_i`; `F_?` also takes everything outside the joint support.
    pub fn lift_povm(&self, reduced: &Povm) -> Result<Povm> {
        let n = self.original.num_states();
        let d_final = self.final_problem.ambient_dim();
        if reduced.dim() != d_final || reduced.conclusive.len() != n {
            return Err(Error::NotUsdOnReduced(format!(
                "expected {n} conclusive elements on a {d_final}-dimensional space"
            )));
        }
        if d_final > 0 {
            let check = is_usd_povm(&self.final_problem, reduced, self.tolerances.usd);
            if !check.is_usd {
                return Err(Error::NotUsdOnReduced(check.failures.join("; ")));
            }
        }
        let mut fs = reduced.conclusive.clone();
        let mut fq = reduced.inconclusive.clone();
        for step in self.steps.iter().rev() {
            let v = step.retained.basis();
            fs = fs.iter().map(|f| f.embed(v)).collect();
            fq = fq.embed(v);
            let proj = step.removed.projector();
            match step.kind {
                NStateStepKind::CommonSubspace { .. } => fq = &fq + &proj,
                NStateStepKind::Identified { state } => fs[state] = &fs[state] + &proj,
            }
        }
        let j = self.support.basis();
        let outside = self.support.orthogonal_complement().projector();
        Povm::new(
            fs.iter().map(|f| f.embed(j)).collect(),
            &fq.embed(j) + &outside,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::failure_probability;
    use approx::assert_abs_diff_eq;

    fn diag(v: &[f64]) -> DensityMatrix {
        DensityMatrix::unchecked(HermitianOperator::from_real_diagonal(v))
    }

    fn lifted_failure(red: &NStateReduction) -> (Povm, f64) {
        let n = red.original.num_states();
        let d = red.final_problem.ambient_dim();
        let m = red.lift_povm(&Povm::all_inconclusive(n, d)).unwrap();
        let q = failure_probability(&red.original, &m).unwrap();
        (m, q)
    }

    #[test]
    fn views_mix_the_other_states() {
        let p = DiscriminationProblem::new(
            vec![
                diag(&[1.0, 0.0, 0.0]),
                diag(&[0.0, 1.0, 0.0]),
                diag(&[0.0, 0.0, 1.0]),
            ],
            vec![0.5, 0.25, 0.25],
        )
        .unwrap();
        let v = build_pairwise_view(&p, 0).unwrap();
        assert_abs_diff_eq!(v.p_tilde1, 0.5);
        assert_abs_diff_eq!(v.p_tilde2, 0.5);
        let expected = HermitianOperator::from_real_diagonal(&[0.0, 0.5, 0.5]);
        assert!((v.rho_tilde2.operator() - &expected).max_abs() < 1e-15);

        let pair =
            DiscriminationProblem::pair(diag(&[1.0, 0.0]), diag(&[0.5, 0.5]), 0.3, 0.7).unwrap();
        let v = build_pairwise_view(&pair, 1).unwrap();
        assert!((v.rho_tilde2.operator() - pair.state(0)).max_abs() < 1e-15);
        assert_abs_diff_eq!(v.p_tilde2, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn degenerate_prior_is_rejected() {
        let p =
            DiscriminationProblem::pair(diag(&[1.0, 0.0]), diag(&[0.0, 1.0]), 1.0, 0.0).unwrap();
        assert!(matches!(
            build_pairwise_view(&p, 0),
            Err(Error::DegeneratePrior { index: 0 })
        ));
        assert!(build_pairwise_view(&p, 2).is_err());
    }

    #[test]
    fn orthogonal_states_are_all_identified() {
        let p = DiscriminationProblem::new(
            vec![
                diag(&[1.0, 0.0, 0.0]),
                diag(&[0.0, 1.0, 0.0]),
                diag(&[0.0, 0.0, 1.0]),
            ],
            vec![0.2, 0.3, 0.5],
        )
        .unwrap();
        let red = nstate_reduce(&p, &Tolerances::default()).unwrap();
        assert_eq!(red.final_problem.ambient_dim(), 0);
        assert_eq!(red.identified_subspaces().len(), 3);
        assert_abs_diff_eq!(red.compose_failure(0.0), 0.0, epsilon = 1e-12);
        let (m, q) = lifted_failure(&red);
        assert!(is_usd_povm(&p, &m, 1e-10).is_usd);
        assert_abs_diff_eq!(q, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_states_leave_nothing() {
        let rho = diag(&[0.6, 0.4]);
        let p =
            DiscriminationProblem::new(vec![rho.clone(), rho.clone(), rho], vec![0.2, 0.3, 0.5])
                .unwrap();
        let red = nstate_reduce(&p, &Tolerances::default()).unwrap();
        assert_eq!(red.final_problem.ambient_dim(), 0);
        assert_abs_diff_eq!(red.compose_failure(0.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(lifted_failure(&red).1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mixture_covering_both_pure_states() {
        // rho_3 = diag(1/2, 1/2, 0) spans e1 and e2, so each pure state lies
        // in the support of the others and nothing can be identified.
        let p = DiscriminationProblem::new(
            vec![
                diag(&[1.0, 0.0, 0.0]),
                diag(&[0.0, 1.0, 0.0]),
                diag(&[0.5, 0.5, 0.0]),
            ],
            vec![1.0 / 3.0; 3],
        )
        .unwrap();
        let tol = Tolerances::default();
        let red = nstate_reduce(&p, &tol).unwrap();
        let first = &red.steps[0];
        assert_eq!(first.kind, NStateStepKind::CommonSubspace { state: 0 });
        assert_abs_diff_eq!(first.q_offset, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(first.q_scale, 0.5, epsilon = 1e-12);
        assert_eq!(red.final_problem.ambient_dim(), 0);
        assert_abs_diff_eq!(red.compose_failure(0.0), 1.0, epsilon = 1e-12);
        assert!(red.identified_subspaces().is_empty());
    }

    #[test]
    fn identified_part_of_a_mixed_state() {
        // rho_1 has e3 outside the other supports; e1 is shared with rho_2.
        let p = DiscriminationProblem::new(
            vec![diag(&[0.5, 0.0, 0.5]), diag(&[0.5, 0.5, 0.0])],
            vec![0.4, 0.6],
        )
        .unwrap();
        let tol = Tolerances::default();
        let red = nstate_reduce(&p, &tol).unwrap();
        // Common e1 first: offset 0.5*0.4 + 0.5*0.6, then e3 for rho_1 and
        // e2 for rho_2 are identified.
        assert_abs_diff_eq!(red.compose_failure(0.0), 0.5, epsilon = 1e-12);
        let supports = p.supports(tol.rank).unwrap();
        for (i, s) in red.identified_subspaces() {
            for (j, t) in supports.iter().enumerate() {
                if j != i {
                    assert!(s.max_cosine(t).unwrap() <= 1e-8);
                }
            }
        }
        let (m, q) = lifted_failure(&red);
        assert!(is_usd_povm(&p, &m, 1e-10).is_usd);
        assert_abs_diff_eq!(q, 0.5, epsilon = 1e-12);
    }
}
