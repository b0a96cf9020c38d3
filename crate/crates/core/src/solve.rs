//! End-to-end solving of a two-state problem: reduce to the standard form,
//! solve what is left (nothing, a pure pair, or a numerical oracle run), and
//! lift the measurement back.

use serde::Serialize;

use crate::error::Result;
use crate::oracle::{solve_optimal_usd, OracleConfig, OracleResiduals};
use crate::problem::{failure_probability, is_usd_povm, DiscriminationProblem, Povm, UsdReport};
use crate::puresolver::{solve_two_pure, PureStatePair, Regime};
use crate::reduction::{reduce_to_standard_form, ReductionTrace};

/// How the standard-form problem was solved.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum FinalSolution {
    /// Nothing left after reduction.
    Empty,
    ClosedForm {
        regime: Regime,
        overlap: f64,
    },
    Oracle {
        residuals: OracleResiduals,
        best_restart: usize,
    },
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub q_opt: f64,
    pub q_final: f64,
    pub solution: FinalSolution,
    pub povm: Povm,
    pub final_povm: Povm,
    pub trace: ReductionTrace,
    /// `failure_probability` of the lifted POVM on the original problem.
    pub q_lifted: f64,
    pub usd: UsdReport,
}

/// Non-convergence of the oracle is an error; pass a looser
/// `gap_tolerance` to accept approximate results.
pub fn solve_problem(p: &DiscriminationProblem, cfg: &OracleConfig) -> Result<Solution> {
    cfg.validate()?;
    let tol = cfg.tolerances;
    let trace = reduce_to_standard_form(p, &tol)?;
    let fin = &trace.final_problem;
    let (q_final, final_povm, solution) = if fin.ambient_dim() == 0 {
        (0.0, Povm::all_inconclusive(2, 0), FinalSolution::Empty)
    } else if fin.ranks(tol.rank)? == [1, 1] {
        let pair = PureStatePair::from_problem(fin, &tol)?;
        let rep = solve_two_pure(&pair)?;
        let sol = FinalSolution::ClosedForm {
            regime: rep.regime,
            overlap: pair.overlap(),
        };
        (rep.q_opt, rep.povm, sol)
    } else {
        let r = solve_optimal_usd(fin, cfg)?.require_converged()?;
        let sol = FinalSolution::Oracle {
            residuals: r.residuals.clone(),
            best_restart: r.best_restart,
        };
        (r.q_opt, r.povm, sol)
    };
    let povm = trace.lift_povm(&final_povm)?;
    let q_lifted = failure_probability(p, &povm)?;
    let usd = is_usd_povm(p, &povm, tol.usd);
    Ok(Solution {
        q_opt: trace.compose_failure(q_final),
        q_final,
        solution,
        povm,
        final_povm,
        trace,
        q_lifted,
        usd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ComplexVector, HermitianOperator, C64};
    use crate::problem::DensityMatrix;
    use approx::assert_abs_diff_eq;

    fn pure(v: &[f64]) -> DensityMatrix {
        let v: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
        DensityMatrix::pure(&ComplexVector::from_vec(v))
    }

    #[test]
    fn pure_pair_uses_the_closed_form() {
        let h = 0.75f64.sqrt();
        let p = DiscriminationProblem::pair(pure(&[1.0, 0.0]), pure(&[0.5, h]), 0.5, 0.5).unwrap();
        let s = solve_problem(&p, &OracleConfig::default()).unwrap();
        assert!(matches!(
            s.solution,
            FinalSolution::ClosedForm {
                regime: Regime::Interior,
                ..
            }
        ));
        assert_abs_diff_eq!(s.q_opt, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q_lifted, 0.5, epsilon = 1e-12);
        assert!(s.usd.is_usd);
    }

    #[test]
    fn identical_states_never_conclude() {
        let rho = DensityMatrix::unchecked(HermitianOperator::from_real_diagonal(&[0.3, 0.7, 0.0]));
        let p = DiscriminationProblem::pair(rho.clone(), rho, 0.4, 0.6).unwrap();
        let s = solve_problem(&p, &OracleConfig::default()).unwrap();
        assert_eq!(s.solution, FinalSolution::Empty);
        assert_abs_diff_eq!(s.q_opt, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q_lifted, 1.0, epsilon = 1e-12);
    }
}
