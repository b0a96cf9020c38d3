//! Monte Carlo simulation of a measurement: the true state is drawn from the
//! priors and the outcome from the Born probabilities `Tr(rho_i F_k)`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::trace_product;
use crate::problem::{failure_probability, DiscriminationProblem, Povm};

/// Accepted slack on completeness and positivity of the sampled POVM.
pub const POVM_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport {
    pub trials: u64,
    pub seed: u64,
    /// `counts[i][k]`: true state `i`, outcome `k`; the last outcome is `?`.
    pub counts: Vec<Vec<u64>>,
    pub empirical_q: f64,
    pub analytic_q: f64,
    /// Binomial standard error of `empirical_q` at `analytic_q`.
    pub standard_error: f64,
    pub within_4_sigma: bool,
    pub misidentification_count: u64,
}

/// Outcome probabilities per true state, negatives from rounding clipped.
pub fn born_table(p: &DiscriminationProblem, m: &Povm) -> Result<Vec<Vec<f64>>> {
    p.states()
        .iter()
        .map(|s| {
            m.elements()
                .map(|f| trace_product(s.operator(), f).map(|t| t.max(0.0)))
                .collect()
        })
        .collect()
}

fn check_povm(p: &DiscriminationProblem, m: &Povm) -> Result<()> {
    if m.dim() != p.ambient_dim() || m.conclusive.len() != p.num_states() {
        return Err(Error::InvalidPovm(format!(
            "{} conclusive elements on C^{}, problem has {} states on C^{}",
            m.conclusive.len(),
            m.dim(),
            p.num_states(),
            p.ambient_dim()
        )));
    }
    let res = m.completeness_residual();
    if res > POVM_TOL {
        return Err(Error::InvalidPovm(format!("completeness residual {res:e}")));
    }
    let lo = m.min_eigenvalue()?;
    if lo < -POVM_TOL {
        return Err(Error::InvalidPovm(format!(
            "element with eigenvalue {lo:e}"
        )));
    }
    Ok(())
}

pub fn sample_measurement(
    p: &DiscriminationProblem,
    m: &Povm,
    trials: u64,
    seed: u64,
) -> Result<SampleReport> {
    check_povm(p, m)?;
    let analytic_q = failure_probability(p, m)?;
    let n = p.num_states();
    let table = born_table(p, m)?;
    let priors = WeightedIndex::new(p.priors())
        .map_err(|e| Error::InvalidProblem(format!("priors: {e}")))?;
    let outcomes = table
        .iter()
        .map(|row| {
            WeightedIndex::new(row)
                .map_err(|e| Error::InvalidPovm(format!("Born probabilities: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![vec![0u64; n + 1]; n];
    for _ in 0..trials {
        let i = priors.sample(&mut rng);
        let k = outcomes[i].sample(&mut rng);
        counts[i][k] += 1;
    }

    let failures: u64 = counts.iter().map(|row| row[n]).sum();
    let misidentification_count = counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row[..n]
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, c)| c)
                .sum::<u64>()
        })
        .sum();
    let empirical_q = if trials > 0 {
        failures as f64 / trials as f64
    } else {
        0.0
    };
    let q = analytic_q.clamp(0.0, 1.0);
    let standard_error = if trials > 0 {
        (q * (1.0 - q) / trials as f64).sqrt()
    } else {
        0.0
    };
    let within_4_sigma = (empirical_q - analytic_q).abs() <= 4.0 * standard_error + 1e-12;
    Ok(SampleReport {
        trials,
        seed,
        counts,
        empirical_q,
        analytic_q,
        standard_error,
        within_4_sigma,
        misidentification_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianOperator;
    use crate::problem::DensityMatrix;

    fn diag(v: &[f64]) -> HermitianOperator {
        HermitianOperator::from_real_diagonal(v)
    }

    fn orthogonal_pair() -> DiscriminationProblem {
        DiscriminationProblem::pair(
            DensityMatrix::unchecked(diag(&[1.0, 0.0])),
            DensityMatrix::unchecked(diag(&[0.0, 1.0])),
            0.3,
            0.7,
        )
        .unwrap()
    }

    #[test]
    fn never_concluding_always_fails() {
        let p = orthogonal_pair();
        let r = sample_measurement(&p, &Povm::all_inconclusive(2, 2), 10_000, 1).unwrap();
        assert_eq!(r.empirical_q, 1.0);
        assert_eq!(r.misidentification_count, 0);
        assert_eq!(r.counts.iter().flatten().sum::<u64>(), 10_000);
    }

    #[test]
    fn projective_measurement_of_orthogonal_states_never_fails() {
        let p = orthogonal_pair();
        let m = Povm::new(
            vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])],
            diag(&[0.0, 0.0]),
        )
        .unwrap();
        let r = sample_measurement(&p, &m, 10_000, 2).unwrap();
        assert_eq!(r.empirical_q, 0.0);
        assert!(r.within_4_sigma);
        // About 30% of draws come from the first state.
        let first: u64 = r.counts[0].iter().sum();
        assert!((2700..3300).contains(&first));
    }

    #[test]
    fn rejects_incomplete_measurements() {
        let p = orthogonal_pair();
        let m = Povm::new(
            vec![diag(&[1.0, 0.0]), diag(&[0.0, 0.0])],
            diag(&[0.0, 0.0]),
        )
        .unwrap();
        assert!(matches!(
            sample_measurement(&p, &m, 10, 0),
            Err(Error::InvalidPovm(_))
        ));
        let m = Povm::all_inconclusive(3, 2);
        assert!(matches!(
            sample_measurement(&p, &m, 10, 0),
            Err(Error::InvalidPovm(_))
        ));
    }

    #[test]
    fn seeded_runs_repeat() {
        let p = orthogonal_pair();
        let m = Povm::new(
            vec![diag(&[0.5, 0.0]), diag(&[0.0, 0.5])],
            diag(&[0.5, 0.5]),
        )
        .unwrap();
        let a = sample_measurement(&p, &m, 5000, 7).unwrap();
        let b = sample_measurement(&p, &m, 5000, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.within_4_sigma);
    }
}
