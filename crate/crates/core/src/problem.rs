//! Discrimination problems, POVMs and the unambiguous-measurement predicates.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, max_abs, trace_product, ComplexMatrix, ComplexVector, HermitianOperator,
};
use crate::subspace::{Subspace, DEFAULT_ANGLE_TOL, DEFAULT_RANK_TOL};

pub const TRACE_TOL: f64 = 1e-10;
pub const PRIOR_SUM_TOL: f64 = 1e-10;
pub const COMPLETENESS_TOL: f64 = 1e-8;
pub const DEFAULT_USD_TOL: f64 = 1e-8;

/// Numerical thresholds shared by the subspace engine and the predicates.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Relative eigenvalue threshold for supports and ranks.
    pub rank: f64,
    /// Cosine threshold for intersections and orthogonality.
    pub angle: f64,
    /// Relative slack for the no-misidentification and positivity checks.
    pub usd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: DEFAULT_RANK_TOL,
            angle: DEFAULT_ANGLE_TOL,
            usd: DEFAULT_USD_TOL,
        }
    }
}

/// A (nominally) unit-trace positive semi-definite operator.
///
/// [`DensityMatrix::new`] enforces the invariants. [`DensityMatrix::unchecked`]
/// exists so that malformed input can still be loaded and reported on by
/// [`validate_problem`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(HermitianOperator);

impl DensityMatrix {
    pub fn new(op: HermitianOperator, rank_tol: f64) -> Result<Self> {
        let eig = eig_hermitian(&op)?;
        let lo = eig.min().unwrap_or(0.0);
        if lo < -rank_tol * eig.max().unwrap_or(0.0).abs().max(1.0) {
            return Err(Error::NotPsd { min_eigenvalue: lo });
        }
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidProblem(format!("state has trace {tr}")));
        }
        Ok(Self(op))
    }

    pub fn unchecked(op: HermitianOperator) -> Self {
        Self(op)
    }

    /// `|v><v| / <v|v>`.
    pub fn pure(v: &ComplexVector) -> Self {
        let n = v.norm();
        Self(HermitianOperator::outer(&v.unscale(n)))
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn support(&self, rank_tol: f64) -> Result<Subspace> {
        Subspace::support(&self.0, rank_tol)
    }
}

/// States `rho_i` with priors `p_i`, stored in the full ambient space.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminationProblem {
    states: Vec<DensityMatrix>,
    priors: Vec<f64>,
}

impl DiscriminationProblem {
    /// Structural checks only (count, shapes); the physical invariants are
    /// reported by [`validate_problem`].
    pub fn new(states: Vec<DensityMatrix>, priors: Vec<f64>) -> Result<Self> {
        if states.len() < 2 {
            return Err(Error::InvalidProblem(format!(
                "need at least two states, got {}",
                states.len()
            )));
        }
        if priors.len() != states.len() {
            return Err(Error::InvalidProblem(format!(
                "{} states but {} priors",
                states.len(),
                priors.len()
            )));
        }
        let d = states[0].dim();
        for s in &states[1..] {
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: s.dim(),
                });
            }
        }
        if priors.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidProblem("non-finite prior".into()));
        }
        Ok(Self { states, priors })
    }

    pub fn pair(rho1: DensityMatrix, rho2: DensityMatrix, p1: f64, p2: f64) -> Result<Self> {
        Self::new(vec![rho1, rho2], vec![p1, p2])
    }

    pub fn ambient_dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &HermitianOperator {
        self.states[i].operator()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn prior(&self, i: usize) -> f64 {
        self.priors[i]
    }

    pub fn supports(&self, rank_tol: f64) -> Result<Vec<Subspace>> {
        self.states.iter().map(|s| s.support(rank_tol)).collect()
    }

    pub fn ranks(&self, rank_tol: f64) -> Result<Vec<usize>> {
        Ok(self.supports(rank_tol)?.iter().map(Subspace::dim).collect())
    }

    /// Sum of all supports.
    pub fn joint_support(&self, tol: &Tolerances) -> Result<Subspace> {
        let mut acc = Subspace::zero(self.ambient_dim());
        for s in self.supports(tol.rank)? {
            acc = acc.sum_with_tol(&s, tol.angle)?;
        }
        Ok(acc)
    }

    /// Every state compressed into the coordinates of the isometry `basis`.
    pub(crate) fn compressed(&self, basis: &ComplexMatrix) -> Self {
        Self {
            states: self
                .states
                .iter()
                .map(|s| DensityMatrix(s.operator().compress(basis)))
                .collect(),
            priors: self.priors.clone(),
        }
    }

    /// The rank label `r1+r2 (>|=) d` for a two-state problem, `d` being the
    /// joint-support dimension.
    pub fn case_label(&self, tol: &Tolerances) -> Result<CaseLabel> {
        let ranks = self.ranks(tol.rank)?;
        let d = self.joint_support(tol)?.dim();
        Ok(CaseLabel { ranks, dim: d })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseLabel {
    pub ranks: Vec<usize>,
    pub dim: usize,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let total: usize = self.ranks.iter().sum();
        let joined = self
            .ranks
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join("+");
        let rel = if total > self.dim { ">" } else { "=" };
        write!(f, "{joined}{rel}{}", self.dim)
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Default, serde::Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, residual: f64, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            residual,
            detail,
        });
    }
}

pub fn validate_problem(p: &DiscriminationProblem, tol: &Tolerances) -> ValidationReport {
    let mut report = ValidationReport::default();

    let sum: f64 = p.priors.iter().sum();
    let min_prior = p.priors.iter().cloned().fold(f64::INFINITY, f64::min);
    report.push(
        "priors nonnegative",
        min_prior >= 0.0,
        (-min_prior).max(0.0),
        format!("min prior {min_prior}"),
    );
    report.push(
        "priors sum to 1",
        (sum - 1.0).abs() <= PRIOR_SUM_TOL,
        (sum - 1.0).abs(),
        format!("priors sum {sum}"),
    );
    for (i, &pi) in p.priors.iter().enumerate() {
        if pi == 0.0 {
            report
                .warnings
                .push(format!("state {} has prior 0 and never occurs", i + 1));
        }
    }

    let mut supports = Vec::with_capacity(p.num_states());
    for (i, s) in p.states.iter().enumerate() {
        let op = s.operator();
        match eig_hermitian(op) {
            Ok(eig) => {
                let lo = eig.min().unwrap_or(0.0);
                let scale = eig.max().unwrap_or(0.0).abs().max(1e-300);
                report.push(
                    format!("state {} positive semi-definite", i + 1),
                    lo >= -tol.rank * scale,
                    (-lo).max(0.0),
                    format!("min eigenvalue {lo:e}"),
                );
            }
            Err(e) => report.push(
                format!("state {} eigensolver", i + 1),
                false,
                f64::NAN,
                e.to_string(),
            ),
        }
        let tr = op.trace();
        report.push(
            format!("state {} unit trace", i + 1),
            (tr - 1.0).abs() <= TRACE_TOL,
            (tr - 1.0).abs(),
            format!("trace {tr}"),
        );
        supports.push(s.support(tol.rank).ok());
    }

    if p.num_states() == 2 {
        if let (Some(s1), Some(s2)) = (&supports[0], &supports[1]) {
            if let Ok(joint) = s1.sum_with_tol(s2, tol.angle) {
                let (r1, r2, d) = (s1.dim(), s2.dim(), joint.dim());
                report.push(
                    "rank inequality r1 + r2 >= d",
                    r1 + r2 >= d,
                    0.0,
                    format!("{r1}+{r2} vs d = {d}"),
                );
            }
        }
    }
    report
}

/// Conclusive elements `F_1..F_N` and the inconclusive element `F_?`.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    pub conclusive: Vec<HermitianOperator>,
    pub inconclusive: HermitianOperator,
}

impl Povm {
    pub fn new(
        conclusive: Vec<HermitianOperator>,
        inconclusive: HermitianOperator,
    ) -> Result<Self> {
        let d = inconclusive.dim();
        for f in &conclusive {
            if f.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: f.dim(),
                });
            }
        }
        Ok(Self {
            conclusive,
            inconclusive,
        })
    }

    /// Never concludes: `F_k = 0`, `F_? = I`.
    pub fn all_inconclusive(num_states: usize, dim: usize) -> Self {
        Self {
            conclusive: vec![HermitianOperator::zeros(dim); num_states],
            inconclusive: HermitianOperator::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.inconclusive.dim()
    }

    pub fn elements(&self) -> impl Iterator<Item = &HermitianOperator> {
        self.conclusive
            .iter()
            .chain(std::iter::once(&self.inconclusive))
    }

    /// `max |sum_k F_k + F_? - I|`.
    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        let mut total = ComplexMatrix::identity(d, d).scale(-1.0);
        for f in self.elements() {
            total += f.matrix();
        }
        max_abs(&total)
    }

    /// Smallest eigenvalue over all elements.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut lo = f64::INFINITY;
        for f in self.elements() {
            if let Some(m) = eig_hermitian(f)?.min() {
                lo = lo.min(m);
            }
        }
        Ok(if lo.is_finite() { lo } else { 0.0 })
    }
}

/// `Q = sum_i p_i Tr(rho_i F_?)`.
pub fn failure_probability(p: &DiscriminationProblem, m: &Povm) -> Result<f64> {
    if m.dim() != p.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: p.ambient_dim(),
            found: m.dim(),
        });
    }
    let mut q = 0.0;
    for (s, &pi) in p.states.iter().zip(&p.priors) {
        q += pi * trace_product(s.operator(), &m.inconclusive)?;
    }
    Ok(q)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct UsdReport {
    pub is_usd: bool,
    /// `max_{i != k} Tr(rho_i F_k)`.
    pub max_misidentification: f64,
    /// `max_{i != k} Tr(rho_i F_k) / Tr(F_k)` over non-zero elements.
    pub max_relative_misidentification: f64,
    pub min_eigenvalue: f64,
    pub completeness_residual: f64,
    pub failures: Vec<String>,
}

/// Checks the unambiguous-measurement conditions: positivity of every
/// element, completeness, and `Tr(rho_i F_k) <= tol * Tr(F_k)` for `i != k`.
pub fn is_usd_povm(p: &DiscriminationProblem, m: &Povm, tol: f64) -> UsdReport {
    let mut report = UsdReport {
        is_usd: true,
        max_misidentification: 0.0,
        max_relative_misidentification: 0.0,
        min_eigenvalue: 0.0,
        completeness_residual: 0.0,
        failures: Vec::new(),
    };
    if m.dim() != p.ambient_dim() || m.conclusive.len() != p.num_states() {
        report.is_usd = false;
        report.failures.push(format!(
            "POVM has {} conclusive elements of dimension {}, problem has {} states of dimension {}",
            m.conclusive.len(),
            m.dim(),
            p.num_states(),
            p.ambient_dim()
        ));
        return report;
    }

    for (k, f) in m.conclusive.iter().enumerate() {
        let tr_f = f.trace();
        for (i, s) in p.states.iter().enumerate() {
            if i == k {
                continue;
            }
            let t = trace_product(s.operator(), f).unwrap_or(f64::INFINITY);
            report.max_misidentification = report.max_misidentification.max(t);
            if tr_f > 0.0 {
                report.max_relative_misidentification =
                    report.max_relative_misidentification.max(t / tr_f);
            }
            if t > tol * tr_f.max(0.0) && t > 0.0 {
                report.is_usd = false;
                report
                    .failures
                    .push(format!("Tr(rho_{} F_{}) = {t:e}", i + 1, k + 1));
            }
        }
    }

    let mut lo = f64::INFINITY;
    for (idx, f) in m.elements().enumerate() {
        let name = if idx < m.conclusive.len() {
            format!("F_{}", idx + 1)
        } else {
            "F_?".to_string()
        };
        match eig_hermitian(f) {
            Ok(eig) => {
                let e = eig.min().unwrap_or(0.0);
                lo = lo.min(e);
                if e < -tol * f.max_abs().max(1.0) {
                    report.is_usd = false;
                    report.failures.push(format!("{name} has eigenvalue {e:e}"));
                }
            }
            Err(err) => {
                report.is_usd = false;
                report.failures.push(format!("{name}: {err}"));
            }
        }
    }
    report.min_eigenvalue = if lo.is_finite() { lo } else { 0.0 };

    report.completeness_residual = m.completeness_residual();
    if report.completeness_residual > COMPLETENESS_TOL.max(tol) {
        report.is_usd = false;
        report.failures.push(format!(
            "completeness residual {:e}",
            report.completeness_residual
        ));
    }
    report
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthogonalityReport {
    /// All principal angles are pi/2 within `tol.angle`.
    pub geometric: bool,
    /// `Tr(AB) <= tol.rank * Tr(A) Tr(B)`.
    pub by_trace: bool,
    pub trace_product: f64,
    pub max_cosine: f64,
}

pub fn orthogonality_report(
    a: &HermitianOperator,
    b: &HermitianOperator,
    tol: &Tolerances,
) -> Result<OrthogonalityReport> {
    let sa = Subspace::support(a, tol.rank)?;
    let sb = Subspace::support(b, tol.rank)?;
    let max_cosine = sa.max_cosine(&sb)?;
    let tr = trace_product(a, b)?;
    Ok(OrthogonalityReport {
        geometric: max_cosine <= tol.angle,
        by_trace: tr <= tol.rank * a.trace() * b.trace(),
        trace_product: tr,
        max_cosine,
    })
}

/// Whether the supports of two PSD operators are orthogonal, decided
/// geometrically and cross-checked against the vanishing of `Tr(AB)`.
pub fn supports_orthogonal(
    a: &HermitianOperator,
    b: &HermitianOperator,
    tol: &Tolerances,
) -> Result<bool> {
    let r = orthogonality_report(a, b, tol)?;
    if r.geometric != r.by_trace {
        return Err(Error::InvalidProblem(format!(
            "orthogonality undecided within tolerances: Tr(AB) = {:e}, max principal cosine = {:e}",
            r.trace_product, r.max_cosine
        )));
    }
    Ok(r.geometric)
}
