//! Numerical optimum of two-state unambiguous discrimination, independent of
//! the reductions it is used to check.
//!
//! Working in the joint support, `F_1 = U_1 A_1^dagger A_1 U_1^dagger` where
//! the columns of `U_1` span the orthogonal complement of `S_rho2`, and
//! symmetrically for `F_2`; the no-error conditions then hold by construction.
//! The remaining cap `F_1 + F_2 <= I` is handled by an augmented Lagrangian
//! with eigenvalue clipping, whose penalty parameter walks the configured
//! schedule. Each subproblem is solved by Barzilai-Borwein gradient ascent
//! with Armijo backtracking, so accepted iterates never decrease the
//! subproblem objective.
//!
//! The multiplier doubles as a dual certificate: for any `Lambda >= 0`,
//! `Z = Lambda + t I` with `t = max(0, max_i lambda_max(C_i - U_i^dagger Lambda U_i))`
//! is dual feasible, so `Tr Z` bounds the success probability from above.
//! A run has converged when that bound is within `gap_tolerance` of the best
//! feasible point found.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, svd, trace_product, ComplexMatrix, HermitianOperator, C64};
use crate::problem::{DiscriminationProblem, Povm, Tolerances};
use crate::reduction::ReductionTrace;
use crate::subspace::Subspace;

/// Largest joint-support dimension the oracle accepts.
pub const MAX_ORACLE_DIM: usize = 8;
/// Agreement required between two oracle optima in a certification.
pub const CERTIFICATION_TOL: f64 = 2e-4;

const ARMIJO: f64 = 1e-4;
const GRAD_TOL: f64 = 1e-11;
const MIN_STEP: f64 = 1e-18;
const MAX_STEP: f64 = 1e6;
/// Inner iterations between multiplier updates.
const INNER_CAP: usize = 200;
const INIT_SCALE: f64 = 0.3;
/// Cap eigenvalues within this of 1 count as active in the dual polish.
const ACTIVE_TOL: f64 = 1e-6;
/// Relative eigenvalue threshold for the range of `X_i` in the dual polish.
const RANGE_TOL: f64 = 1e-6;
/// The dual polish is attempted once the plain gap falls below this.
const POLISH_GAP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleConfig {
    pub restarts: usize,
    /// Budget of accepted gradient steps per restart.
    pub max_iterations: usize,
    /// A subproblem stops once an accepted step is shorter than this,
    /// relative to `1 + |A|`.
    pub step_tolerance: f64,
    pub constraint_penalty_schedule: Vec<f64>,
    pub seed: u64,
    /// Duality gap at which a run counts as converged.
    pub gap_tolerance: f64,
    pub tolerances: Tolerances,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iterations: 5000,
            step_tolerance: 1e-10,
            constraint_penalty_schedule: vec![10.0, 100.0, 1000.0, 10000.0],
            seed: 0,
            gap_tolerance: 1e-6,
            tolerances: Tolerances::default(),
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.step_tolerance >= 0.0 && self.gap_tolerance > 0.0) {
            return Err(Error::InvalidConfig(
                "tolerances must be non-negative".into(),
            ));
        }
        let s = &self.constraint_penalty_schedule;
        if s.is_empty() || s.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidConfig("penalties must be positive".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("penalties must increase".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestartSummary {
    pub restart: usize,
    /// Success probability of the feasible (rescaled) iterate.
    pub objective: f64,
    /// Best dual bound on the success probability seen in this restart.
    pub dual_bound: f64,
    pub iterations: usize,
    /// Accepted steps never decreased the subproblem objective.
    pub monotone: bool,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResiduals {
    /// `max(0, lambda_max(F_1 + F_2) - 1)` before the final rescaling.
    pub cap_violation: f64,
    /// Smallest eigenvalue over `F_1`, `F_2`, `F_?`.
    pub min_eigenvalue: f64,
    /// `max_{i != k} Tr(rho_i F_k)`.
    pub max_misidentification: f64,
    /// Lower bound on the failure probability from the best dual certificate.
    pub q_lower_bound: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub q_opt: f64,
    pub povm: Povm,
    pub converged: bool,
    pub best_restart: usize,
    pub residuals: OracleResiduals,
    pub restarts: Vec<RestartSummary>,
}

impl OracleResult {
    /// `Err(NotConverged)` unless the duality gap closed.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                gap: self.residuals.gap,
            })
        }
    }
}

type Pair = [ComplexMatrix; 2];

/// The problem in joint-support coordinates.
struct Setup {
    joint: ComplexMatrix,
    h: usize,
    u: Pair,
    c: Pair,
    mass: f64,
}

fn herm(m: ComplexMatrix) -> HermitianOperator {
    HermitianOperator::from_hermitian_part(m)
}

fn lambda_max(m: &ComplexMatrix) -> Result<f64> {
    Ok(eig_hermitian(&herm(m.clone()))?.max().unwrap_or(0.0))
}

fn re_dot(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Real basis of the `n x n` Hermitian matrices.
fn hermitian_basis(n: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        let mut e = ComplexMatrix::zeros(n, n);
        e[(j, j)] = C64::new(1.0, 0.0);
        out.push(e);
        for l in j + 1..n {
            let mut re = ComplexMatrix::zeros(n, n);
            re[(j, l)] = C64::new(1.0, 0.0);
            re[(l, j)] = C64::new(1.0, 0.0);
            out.push(re);
            let mut im = ComplexMatrix::zeros(n, n);
            im[(j, l)] = C64::new(0.0, 1.0);
            im[(l, j)] = C64::new(0.0, -1.0);
            out.push(im);
        }
    }
    out
}

fn grams(a: &Pair) -> Pair {
    [a[0].adjoint() * &a[0], a[1].adjoint() * &a[1]]
}

impl Setup {
    fn new(p: &DiscriminationProblem, tol: &Tolerances) -> Result<Self> {
        let support = p.joint_support(tol)?;
        let h = support.dim();
        if h > MAX_ORACLE_DIM {
            return Err(Error::TooLarge {
                dim: h,
                limit: MAX_ORACLE_DIM,
            });
        }
        let joint = support.basis().clone();
        let sigma = [p.state(0).compress(&joint), p.state(1).compress(&joint)];
        let s1 = Subspace::support(&sigma[0], tol.rank)?;
        let s2 = Subspace::support(&sigma[1], tol.rank)?;
        let u = [
            s2.orthogonal_complement().basis().clone(),
            s1.orthogonal_complement().basis().clone(),
        ];
        let c = [
            sigma[0].compress(&u[0]).into_matrix() * C64::from(p.prior(0)),
            sigma[1].compress(&u[1]).into_matrix() * C64::from(p.prior(1)),
        ];
        let mass = p.prior(0) * p.state(0).trace() + p.prior(1) * p.state(1).trace();
        Ok(Self {
            joint,
            h,
            u,
            c,
            mass,
        })
    }

    fn is_trivial(&self) -> bool {
        self.u[0].ncols() == 0 && self.u[1].ncols() == 0
    }

    fn cap(&self, x: &Pair) -> ComplexMatrix {
        &self.u[0] * &x[0] * self.u[0].adjoint() + &self.u[1] * &x[1] * self.u[1].adjoint()
    }

    fn objective(&self, x: &Pair) -> f64 {
        re_dot(&self.c[0], &x[0]) + re_dot(&self.c[1], &x[1])
    }

    fn dual_bound(&self, lam: &ComplexMatrix) -> Result<f64> {
        let mut t: f64 = 0.0;
        for i in 0..2 {
            if self.u[i].ncols() > 0 {
                let w = &self.c[i] - self.u[i].adjoint() * lam * &self.u[i];
                t = t.max(lambda_max(&w)?);
            }
        }
        Ok(lam.trace().re + t * self.h as f64)
    }

    /// Dual bound from a multiplier fitted to the primal point `x` (assumed
    /// feasible): `Z = P Y P^dagger` on the active space `P` of the cap, with
    /// `Y` the least-squares solution of the stationarity conditions
    /// `(C_i - U_i^dagger Z U_i) R_i = 0` on the ranges `R_i` of `X_i`.
    fn polished_dual_bound(&self, x: &Pair) -> Result<f64> {
        let g = eig_hermitian(&herm(self.cap(x)))?;
        let p = g.select(|l| l >= 1.0 - ACTIVE_TOL);
        let a = p.ncols();
        let mut blocks = Vec::new();
        for i in 0..2 {
            if self.u[i].ncols() == 0 {
                continue;
            }
            let ex = eig_hermitian(&herm(x[i].clone()))?;
            let top = ex.max().unwrap_or(0.0);
            let r = ex.select(|l| l > RANGE_TOL * top);
            if r.ncols() > 0 {
                blocks.push((self.u[i].adjoint() * &p, r, &self.c[i]));
            }
        }
        let rows: usize = blocks
            .iter()
            .map(|(b, r, _)| 2 * b.nrows() * r.ncols())
            .sum();
        let lam = if a == 0 || rows == 0 {
            ComplexMatrix::zeros(self.h, self.h)
        } else {
            let basis = hermitian_basis(a);
            let stack = |m: &ComplexMatrix, out: &mut Vec<f64>| {
                out.extend(m.iter().map(|z| z.re));
                out.extend(m.iter().map(|z| z.im));
            };
            let mut design = ComplexMatrix::zeros(rows, basis.len());
            for (k, e) in basis.iter().enumerate() {
                let mut col = Vec::with_capacity(rows);
                for (b, r, _) in &blocks {
                    stack(&(b * e * b.adjoint() * r), &mut col);
                }
                for (j, v) in col.into_iter().enumerate() {
                    design[(j, k)] = C64::from(v);
                }
            }
            let mut target = Vec::with_capacity(rows);
            for (_, r, c) in &blocks {
                stack(&(*c * r), &mut target);
            }
            let sd = svd(&design)?;
            let floor = sd.singular_values.first().copied().unwrap_or(0.0) * 1e-12;
            let mut coef = vec![0.0; basis.len()];
            for (j, &sv) in sd.singular_values.iter().enumerate() {
                if sv <= floor {
                    continue;
                }
                let proj: f64 = (0..rows).map(|r| sd.u[(r, j)].re * target[r]).sum::<f64>() / sv;
                for (k, c) in coef.iter_mut().enumerate() {
                    *c += sd.v[(k, j)].re * proj;
                }
            }
            let y = basis
                .iter()
                .zip(&coef)
                .fold(ComplexMatrix::zeros(a, a), |acc, (e, &w)| {
                    acc + e * C64::from(w)
                });
            let y = eig_hermitian(&herm(y))?.map_spectrum(|l| l.max(0.0));
            &p * y * p.adjoint()
        };
        self.dual_bound(&lam)
    }

    /// Augmented objective, clipped multiplier estimate and gradient.
    fn evaluate(&self, a: &Pair, lam: &ComplexMatrix, mu: f64) -> Result<Eval> {
        let x = grams(a);
        let id = ComplexMatrix::identity(self.h, self.h);
        let y = lam + (self.cap(&x) - id) * C64::from(mu);
        let m = eig_hermitian(&herm(y))?.map_spectrum(|l| l.max(0.0));
        let value = self.objective(&x) - (m.norm_squared() - lam.norm_squared()) / (2.0 * mu);
        let grad = [0, 1].map(|i| {
            let w = &self.c[i] - self.u[i].adjoint() * &m * &self.u[i];
            &a[i] * w * C64::from(2.0)
        });
        Ok(Eval { value, m, grad })
    }
}

struct Eval {
    value: f64,
    m: ComplexMatrix,
    grad: Pair,
}

struct RestartOutcome {
    summary: RestartSummary,
    x: Pair,
    cap_violation: f64,
}

fn random_factor(k: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let sd = (INIT_SCALE / (2.0 * k.max(1) as f64)).sqrt();
    ComplexMatrix::from_fn(k, k, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * sd, im * sd)
    })
}

/// Gradient ascent on the augmented objective for fixed `(lam, mu)`.
fn ascend(
    setup: &Setup,
    a: &mut Pair,
    lam: &ComplexMatrix,
    mu: f64,
    budget: usize,
    grad_tol: f64,
    cfg: &OracleConfig,
    step: &mut f64,
    monotone: &mut bool,
) -> Result<Inner> {
    let mut cur = setup.evaluate(a, lam, mu)?;
    let mut accepted = 0;
    let mut solved = false;
    while accepted < budget {
        let gn2 = cur.grad[0].norm_squared() + cur.grad[1].norm_squared();
        if gn2.sqrt() <= grad_tol {
            solved = true;
            break;
        }
        let mut t = *step;
        let next = loop {
            let trial = [0, 1].map(|i| &a[i] + &cur.grad[i] * C64::from(t));
            let e = setup.evaluate(&trial, lam, mu)?;
            if e.value >= cur.value + ARMIJO * t * gn2 {
                break Some((trial, e));
            }
            t *= 0.5;
            if t < MIN_STEP {
                break None;
            }
        };
        let Some((trial, e)) = next else { break };
        accepted += 1;
        if e.value < cur.value {
            *monotone = false;
        }
        let s = [0, 1].map(|i| &trial[i] - &a[i]);
        let y = [0, 1].map(|i| &cur.grad[i] - &e.grad[i]);
        let sy = re_dot(&s[0], &y[0]) + re_dot(&s[1], &y[1]);
        let ss = s[0].norm_squared() + s[1].norm_squared();
        *step = if sy > 0.0 {
            (ss / sy).clamp(MIN_STEP, MAX_STEP)
        } else {
            (2.0 * t).min(MAX_STEP)
        };
        let size = (a[0].norm_squared() + a[1].norm_squared()).sqrt();
        *a = trial;
        cur = e;
        if ss.sqrt() <= cfg.step_tolerance * (1.0 + size) {
            break;
        }
    }
    Ok(Inner {
        accepted,
        eval: cur,
        solved,
    })
}

struct Inner {
    accepted: usize,
    eval: Eval,
    /// Stopped on the gradient test.
    solved: bool,
}

fn run_restart(setup: &Setup, cfg: &OracleConfig, restart: usize) -> Result<RestartOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(restart as u64);
    let mut a = [0, 1].map(|i| random_factor(setup.u[i].ncols(), &mut rng));
    let schedule = &cfg.constraint_penalty_schedule;
    let mut stage = 0;
    let mut lam = ComplexMatrix::zeros(setup.h, setup.h);
    let mut step = 1.0 / (1.0 + schedule[0]);
    let mut monotone = true;
    let mut used = 0;
    let mut prev_residual = f64::INFINITY;
    let mut best_dual = f64::INFINITY;
    let mut best: Option<(f64, Pair, f64)> = None;
    let mut converged = false;
    while used < cfg.max_iterations {
        let budget = INNER_CAP.min(cfg.max_iterations - used);
        let mu = schedule[stage];
        let grad_tol = (0.1 * prev_residual).clamp(GRAD_TOL, 1e-3);
        let inner = ascend(
            setup,
            &mut a,
            &lam,
            mu,
            budget,
            grad_tol,
            cfg,
            &mut step,
            &mut monotone,
        )?;
        let (n, e) = (inner.accepted, inner.eval);
        used += n.max(1);
        // Scaled multiplier change: zero exactly at a KKT point.
        let residual = (&e.m - &lam).norm() / mu;
        lam = e.m;

        let x = grams(&a);
        let top = lambda_max(&setup.cap(&x))?;
        let violation = (top - 1.0).max(0.0);
        let shrink = 1.0 / top.max(1.0);
        let f = setup.objective(&x) * shrink;
        if best.as_ref().is_none_or(|(bf, _, _)| f > *bf) {
            best = Some((f, x.clone().map(|xi| xi * C64::from(shrink)), violation));
        }
        best_dual = best_dual.min(setup.dual_bound(&lam)?);
        let best_f = best.as_ref().map_or(0.0, |b| b.0);
        if best_dual - best_f > cfg.gap_tolerance && best_dual - best_f < POLISH_GAP {
            let feasible = x.map(|xi| xi * C64::from(shrink));
            best_dual = best_dual.min(setup.polished_dual_bound(&feasible)?);
        }
        if best_dual - best_f <= cfg.gap_tolerance {
            converged = true;
            break;
        }
        if inner.solved && residual > 0.25 * prev_residual && stage + 1 < schedule.len() {
            stage += 1;
        }
        prev_residual = residual;
    }
    let (objective, x, cap_violation) = best.expect("at least one outer iteration");
    Ok(RestartOutcome {
        summary: RestartSummary {
            restart,
            objective,
            dual_bound: best_dual,
            iterations: used,
            monotone,
            converged,
        },
        x,
        cap_violation,
    })
}

fn assemble(setup: &Setup, x: &Pair, d: usize) -> Result<Povm> {
    let f = [0, 1].map(|i| {
        let v = &setup.joint * &setup.u[i];
        herm(&v * &x[i] * v.adjoint())
    });
    let fq = herm(ComplexMatrix::identity(d, d) - f[0].matrix() - f[1].matrix());
    let [f1, f2] = f;
    Povm::new(vec![f1, f2], fq)
}

/// Smallest POVM eigenvalue and largest misidentification probability.
fn residuals(p: &DiscriminationProblem, povm: &Povm) -> Result<(f64, f64)> {
    let mis = trace_product(p.state(1), &povm.conclusive[0])?
        .max(trace_product(p.state(0), &povm.conclusive[1])?)
        .max(0.0);
    Ok((povm.min_eigenvalue()?, mis))
}

/// Maximizes `p_1 Tr(rho_1 F_1) + p_2 Tr(rho_2 F_2)` over unambiguous
/// measurements and reports `q_opt = sum_i p_i Tr(rho_i) - max`.
///
/// Restarts run serially from seeds derived from `cfg.seed`; the best
/// feasible objective wins, ties going to the lowest restart index. A result
/// whose duality gap did not close is returned with `converged = false`.
pub fn solve_optimal_usd(p: &DiscriminationProblem, cfg: &OracleConfig) -> Result<OracleResult> {
    cfg.validate()?;
    if p.num_states() != 2 {
        return Err(Error::InvalidProblem(format!(
            "the oracle handles 2 states, got {}",
            p.num_states()
        )));
    }
    let d = p.ambient_dim();
    let setup = Setup::new(p, &cfg.tolerances)?;
    if setup.h == 0 || setup.is_trivial() {
        let povm = Povm::all_inconclusive(2, d);
        let min_eigenvalue = if d == 0 { 0.0 } else { povm.min_eigenvalue()? };
        return Ok(OracleResult {
            q_opt: setup.mass,
            povm,
            converged: true,
            best_restart: 0,
            residuals: OracleResiduals {
                cap_violation: 0.0,
                min_eigenvalue,
                max_misidentification: 0.0,
                q_lower_bound: setup.mass,
                gap: 0.0,
            },
            restarts: Vec::new(),
        });
    }

    let mut outcomes = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        outcomes.push(run_restart(&setup, cfg, r)?);
    }
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.summary.objective > outcomes[best].summary.objective {
            best = i;
        }
    }
    let dual = outcomes
        .iter()
        .map(|o| o.summary.dual_bound)
        .fold(f64::INFINITY, f64::min);
    let winner = &outcomes[best];
    let objective = winner.summary.objective;
    let gap = (dual - objective).max(0.0);
    let povm = assemble(&setup, &winner.x, d)?;
    let (min_eigenvalue, max_misidentification) = residuals(p, &povm)?;
    Ok(OracleResult {
        q_opt: setup.mass - objective,
        povm,
        converged: gap <= cfg.gap_tolerance,
        best_restart: best,
        residuals: OracleResiduals {
            cap_violation: winner.cap_violation,
            min_eigenvalue,
            max_misidentification,
            q_lower_bound: setup.mass - dual,
            gap,
        },
        restarts: outcomes.into_iter().map(|o| o.summary).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certification {
    pub q_original: f64,
    pub q_final: f64,
    pub q_composed: f64,
    pub difference: f64,
    pub original_converged: bool,
    pub final_converged: bool,
    pub pass: bool,
}

/// Runs the oracle on the original and on the reduced problem and compares
/// `Q_opt(original)` with the composed `Q_opt(final)`. A zero-dimensional
/// final problem contributes `Q = 0`.
pub fn certify_against_reduction(
    p: &DiscriminationProblem,
    trace: &ReductionTrace,
    cfg: &OracleConfig,
) -> Result<Certification> {
    if trace.original.ambient_dim() != p.ambient_dim() || trace.original.priors() != p.priors() {
        return Err(Error::InvalidProblem(
            "reduction trace was produced from a different problem".into(),
        ));
    }
    let original = solve_optimal_usd(p, cfg)?;
    let (q_final, final_converged) = if trace.final_problem.ambient_dim() == 0 {
        (0.0, true)
    } else {
        let r = solve_optimal_usd(&trace.final_problem, cfg)?;
        (r.q_opt, r.converged)
    };
    let q_composed = trace.compose_failure(q_final);
    let difference = (original.q_opt - q_composed).abs();
    Ok(Certification {
        q_original: original.q_opt,
        q_final,
        q_composed,
        difference,
        original_converged: original.converged,
        final_converged,
        pass: original.converged && final_converged && difference <= CERTIFICATION_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexVector;
    use crate::problem::{failure_probability, is_usd_povm, DensityMatrix};
    use crate::reduction::reduce_to_standard_form;
    use approx::assert_abs_diff_eq;

    fn diag(v: &[f64]) -> DensityMatrix {
        DensityMatrix::unchecked(HermitianOperator::from_real_diagonal(v))
    }

    fn pure(v: &[C64]) -> DensityMatrix {
        DensityMatrix::pure(&ComplexVector::from_column_slice(v))
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn quick() -> OracleConfig {
        OracleConfig {
            restarts: 4,
            ..OracleConfig::default()
        }
    }

    fn assert_feasible(p: &DiscriminationProblem, r: &OracleResult) {
        assert!(r.converged, "gap {}", r.residuals.gap);
        assert!(r.residuals.min_eigenvalue >= -1e-6);
        assert!(r.residuals.max_misidentification <= 1e-10);
        assert!(is_usd_povm(p, &r.povm, 1e-6).is_usd);
        assert_abs_diff_eq!(
            failure_probability(p, &r.povm).unwrap(),
            r.q_opt,
            epsilon = 1e-8
        );
        assert!(r.restarts.iter().all(|s| s.monotone));
    }

    #[test]
    fn trivial_cases() {
        let orth =
            DiscriminationProblem::pair(diag(&[1.0, 0.0]), diag(&[0.0, 1.0]), 0.3, 0.7).unwrap();
        let r = solve_optimal_usd(&orth, &quick()).unwrap();
        assert_feasible(&orth, &r);
        assert_abs_diff_eq!(r.q_opt, 0.0, epsilon = 1e-8);

        let same =
            DiscriminationProblem::pair(diag(&[0.5, 0.5]), diag(&[0.5, 0.5]), 0.4, 0.6).unwrap();
        let r = solve_optimal_usd(&same, &quick()).unwrap();
        assert_eq!(r.q_opt, 1.0);
        assert_eq!(r.povm.inconclusive, HermitianOperator::identity(2));
    }

    #[test]
    fn equal_prior_pure_pair() {
        let s: f64 = 0.5;
        let p = DiscriminationProblem::pair(
            pure(&[c(1.0, 0.0), c(0.0, 0.0)]),
            pure(&[c(s, 0.0), c(0.0, (1.0 - s * s).sqrt())]),
            0.5,
            0.5,
        )
        .unwrap();
        let r = solve_optimal_usd(&p, &quick()).unwrap();
        assert_feasible(&p, &r);
        assert_abs_diff_eq!(r.q_opt, 0.5, epsilon = 2e-4);
    }

    #[test]
    fn boundary_pure_pair() {
        let s: f64 = 0.8;
        let p = DiscriminationProblem::pair(
            pure(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            pure(&[c(s, 0.0), c(0.0, 0.0), c(0.6, 0.0)]),
            0.1,
            0.9,
        )
        .unwrap();
        let r = solve_optimal_usd(&p, &quick()).unwrap();
        assert_feasible(&p, &r);
        assert_abs_diff_eq!(r.q_opt, 0.676, epsilon = 2e-4);
    }

    #[test]
    fn overlapping_mixtures_certify() {
        let p =
            DiscriminationProblem::pair(diag(&[0.5, 0.5, 0.0]), diag(&[0.5, 0.0, 0.5]), 0.5, 0.5)
                .unwrap();
        let tol = Tolerances::default();
        let trace = reduce_to_standard_form(&p, &tol).unwrap();
        let cert = certify_against_reduction(&p, &trace, &quick()).unwrap();
        assert!(cert.pass, "{cert:?}");
        assert_abs_diff_eq!(cert.q_original, 0.5, epsilon = 2e-4);
        assert_abs_diff_eq!(cert.q_composed, 0.5, epsilon = 2e-4);
    }

    #[test]
    fn orthogonal_supports_certify() {
        let p = DiscriminationProblem::pair(
            diag(&[0.5, 0.5, 0.0, 0.0]),
            diag(&[0.0, 0.0, 0.25, 0.75]),
            0.5,
            0.5,
        )
        .unwrap();
        let trace = reduce_to_standard_form(&p, &Tolerances::default()).unwrap();
        let cert = certify_against_reduction(&p, &trace, &quick()).unwrap();
        assert!(cert.pass);
        assert_abs_diff_eq!(cert.q_original, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn deterministic() {
        let p = DiscriminationProblem::pair(
            pure(&[c(1.0, 0.0), c(0.0, 0.0)]),
            pure(&[c(0.6, 0.0), c(0.0, 0.8)]),
            0.3,
            0.7,
        )
        .unwrap();
        let cfg = OracleConfig { seed: 7, ..quick() };
        let a = solve_optimal_usd(&p, &cfg).unwrap();
        let b = solve_optimal_usd(&p, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_checks() {
        let p =
            DiscriminationProblem::pair(diag(&[1.0, 0.0]), diag(&[0.0, 1.0]), 0.5, 0.5).unwrap();
        for bad in [
            OracleConfig {
                restarts: 0,
                ..OracleConfig::default()
            },
            OracleConfig {
                constraint_penalty_schedule: vec![10.0, 5.0],
                ..OracleConfig::default()
            },
            OracleConfig {
                constraint_penalty_schedule: vec![],
                ..OracleConfig::default()
            },
        ] {
            assert!(matches!(
                solve_optimal_usd(&p, &bad),
                Err(Error::InvalidConfig(_))
            ));
        }
    }

    #[test]
    fn too_large() {
        let big = diag(&[0.1; 10]);
        let p = DiscriminationProblem::pair(big.clone(), big, 0.5, 0.5).unwrap();
        assert!(matches!(
            solve_optimal_usd(&p, &quick()),
            Err(Error::TooLarge { dim: 10, limit: 8 })
        ));
    }
}
