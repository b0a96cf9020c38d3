//! JSON file formats: problems (`usd-problem/1`), measurements
//! (`usd-povm/1`) and serializable views of reduction traces.
//!
//! Complex entries are `[re, im]` pairs, matrices are row-major nested
//! arrays. Floats are written in shortest round-trip form.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianOperator, C64};
use crate::multistate::{NStateReduction, NStateStepKind};
use crate::problem::{DensityMatrix, DiscriminationProblem, Povm, Tolerances};
use crate::reduction::{ReductionTrace, StandardFormReport, StepKind};
use crate::subspace::Subspace;

pub const PROBLEM_VERSION: &str = "usd-problem/1";
pub const POVM_VERSION: &str = "usd-povm/1";

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|c| [m[(r, c)].re, m[(r, c)].im])
                .collect()
        })
        .collect()
}

/// Rows must all have `cols` entries; `cols` is needed for zero-row input.
pub fn matrix_from_json(rows: &MatrixJson, cols: usize) -> Result<ComplexMatrix> {
    if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Parse(format!(
            "row {} has {} entries, expected {cols}",
            bad,
            rows[bad].len()
        )));
    }
    Ok(ComplexMatrix::from_fn(rows.len(), cols, |r, c| {
        let [re, im] = rows[r][c];
        C64::new(re, im)
    }))
}

fn operator_from_json(rows: &MatrixJson, dim: usize, what: &str) -> Result<HermitianOperator> {
    if rows.len() != dim {
        return Err(Error::Parse(format!(
            "{what} has {} rows, expected {dim}",
            rows.len()
        )));
    }
    let m = matrix_from_json(rows, dim).map_err(|e| Error::Parse(format!("{what}: {e}")))?;
    HermitianOperator::new(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateEntry {
    pub prior: f64,
    pub matrix: MatrixJson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub version: String,
    pub ambient_dim: usize,
    pub states: Vec<StateEntry>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl ProblemFile {
    pub fn from_problem(p: &DiscriminationProblem, metadata: BTreeMap<String, String>) -> Self {
        Self {
            version: PROBLEM_VERSION.into(),
            ambient_dim: p.ambient_dim(),
            states: p
                .states()
                .iter()
                .zip(p.priors())
                .map(|(s, &prior)| StateEntry {
                    prior,
                    matrix: matrix_to_json(s.operator().matrix()),
                })
                .collect(),
            metadata,
        }
    }

    /// Structural conversion only: the result may still fail
    /// [`crate::problem::validate_problem`].
    pub fn to_problem(&self) -> Result<DiscriminationProblem> {
        if self.version != PROBLEM_VERSION {
            return Err(Error::Parse(format!(
                "unsupported version {:?}, expected {PROBLEM_VERSION:?}",
                self.version
            )));
        }
        let mut states = Vec::with_capacity(self.states.len());
        let mut priors = Vec::with_capacity(self.states.len());
        for (i, s) in self.states.iter().enumerate() {
            let op = operator_from_json(&s.matrix, self.ambient_dim, &format!("state {}", i + 1))?;
            states.push(DensityMatrix::unchecked(op));
            priors.push(s.prior);
        }
        DiscriminationProblem::new(states, priors)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PovmFile {
    pub version: String,
    pub ambient_dim: usize,
    pub conclusive: Vec<MatrixJson>,
    pub inconclusive: MatrixJson,
}

impl PovmFile {
    pub fn from_povm(m: &Povm) -> Self {
        Self {
            version: POVM_VERSION.into(),
            ambient_dim: m.dim(),
            conclusive: m
                .conclusive
                .iter()
                .map(|f| matrix_to_json(f.matrix()))
                .collect(),
            inconclusive: matrix_to_json(m.inconclusive.matrix()),
        }
    }

    pub fn to_povm(&self) -> Result<Povm> {
        if self.version != POVM_VERSION {
            return Err(Error::Parse(format!(
                "unsupported version {:?}, expected {POVM_VERSION:?}",
                self.version
            )));
        }
        let d = self.ambient_dim;
        let conclusive = self
            .conclusive
            .iter()
            .enumerate()
            .map(|(k, f)| operator_from_json(f, d, &format!("F_{}", k + 1)))
            .collect::<Result<Vec<_>>>()?;
        let inconclusive = operator_from_json(&self.inconclusive, d, "F_?")?;
        Povm::new(conclusive, inconclusive)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("POVM files serialize")
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn read_problem(path: &Path) -> Result<DiscriminationProblem> {
    ProblemFile::from_json(&read(path)?)?.to_problem()
}

pub fn read_povm(path: &Path) -> Result<Povm> {
    PovmFile::from_json(&read(path)?)?.to_povm()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubspaceJson {
    pub dim: usize,
    /// Orthonormal basis vectors as columns, in the coordinates of the step's
    /// input space.
    pub basis: MatrixJson,
}

impl From<&Subspace> for SubspaceJson {
    fn from(s: &Subspace) -> Self {
        Self {
            dim: s.dim(),
            basis: matrix_to_json(s.basis()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepJson {
    pub kind: StepKind,
    pub input_dim: usize,
    pub output_dim: usize,
    pub removed: Vec<SubspaceJson>,
    pub retained: SubspaceJson,
    pub n1: f64,
    pub n2: f64,
    pub q_offset: f64,
    pub q_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceJson {
    pub original_label: String,
    pub final_label: String,
    pub support: SubspaceJson,
    pub steps: Vec<StepJson>,
    pub final_report: StandardFormReport,
    pub final_problem: ProblemFile,
    pub tolerances: Tolerances,
}

impl TraceJson {
    pub fn from_trace(t: &ReductionTrace) -> Result<Self> {
        Ok(Self {
            original_label: t.original.case_label(&t.tolerances)?.to_string(),
            final_label: t.final_report()?.label().to_string(),
            support: (&t.support).into(),
            steps: t
                .steps
                .iter()
                .map(|s| StepJson {
                    kind: s.kind,
                    input_dim: s.input_dim(),
                    output_dim: s.output_dim(),
                    removed: s.removed.iter().map(Into::into).collect(),
                    retained: (&s.retained).into(),
                    n1: s.n1,
                    n2: s.n2,
                    q_offset: s.q_offset,
                    q_scale: s.q_scale,
                })
                .collect(),
            final_report: t.final_report()?,
            final_problem: ProblemFile::from_problem(&t.final_problem, BTreeMap::new()),
            tolerances: t.tolerances,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NStateStepJson {
    #[serde(flatten)]
    pub kind: NStateStepKind,
    pub removed: SubspaceJson,
    pub retained: SubspaceJson,
    pub weights: Vec<f64>,
    pub q_offset: f64,
    pub q_scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NStateTraceJson {
    pub support: SubspaceJson,
    pub passes: usize,
    pub steps: Vec<NStateStepJson>,
    pub final_problem: ProblemFile,
    pub tolerances: Tolerances,
}

impl From<&NStateReduction> for NStateTraceJson {
    fn from(r: &NStateReduction) -> Self {
        Self {
            support: (&r.support).into(),
            passes: r.passes,
            steps: r
                .steps
                .iter()
                .map(|s| NStateStepJson {
                    kind: s.kind,
                    removed: (&s.removed).into(),
                    retained: (&s.retained).into(),
                    weights: s.weights.clone(),
                    q_offset: s.q_offset,
                    q_scale: s.q_scale,
                })
                .collect(),
            final_problem: ProblemFile::from_problem(&r.final_problem, BTreeMap::new()),
            tolerances: r.tolerances,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "version": "usd-problem/1",
        "ambient_dim": 2,
        "states": [
            {"prior": 0.5, "matrix": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]},
            {"prior": 0.5, "matrix": [[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]]}
        ]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let file = ProblemFile::from_json(SAMPLE).unwrap();
        assert!(file.metadata.is_empty());
        let p = file.to_problem().unwrap();
        assert_eq!(p.num_states(), 2);
        let again =
            ProblemFile::from_json(&ProblemFile::from_problem(&p, BTreeMap::new()).to_json())
                .unwrap();
        assert_eq!(again.to_problem().unwrap(), p);
    }

    #[test]
    fn structural_errors_are_parse_errors() {
        assert!(matches!(ProblemFile::from_json("{"), Err(Error::Parse(_))));
        let wrong_version = SAMPLE.replace("usd-problem/1", "usd-problem/9");
        let f = ProblemFile::from_json(&wrong_version).unwrap();
        assert!(matches!(f.to_problem(), Err(Error::Parse(_))));
        let short_row = SAMPLE.replace(
            "[[1, 0], [0, 0]], [[0, 0], [0, 0]]",
            "[[1, 0]], [[0, 0], [0, 0]]",
        );
        let f = ProblemFile::from_json(&short_row).unwrap();
        assert!(matches!(f.to_problem(), Err(Error::Parse(_))));
    }

    #[test]
    fn povm_round_trip() {
        let m = Povm::all_inconclusive(2, 3);
        let back = PovmFile::from_json(&PovmFile::from_povm(&m).to_json())
            .unwrap()
            .to_povm()
            .unwrap();
        assert_eq!(back, m);
    }
}
