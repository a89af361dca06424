//! Problem-file schema: named states, algebras, channels, and inclusion
//! scenarios plus an ordered task list, all in one JSON document.
//!
//! Complex numbers are `[re, im]` pairs; matrices are row-major nested
//! arrays. The version tag is `"vnd-1"`.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Deserialize;

use vnd_core::algebra::{close_star_algebra, MatrixAlgebra, State};
use vnd_core::channels::Channel;
use vnd_core::inclusions::{build_named_orbifold, build_orbifold_inclusion, InclusionScenario};
use vnd_core::matrixkit::ComplexMatrix;

use crate::CliError;

pub const FORMAT_VERSION: &str = "vnd-1";

type RawComplex = [f64; 2];
type RawMatrix = Vec<Vec<RawComplex>>;
type RawVector = Vec<RawComplex>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub version: String,
    #[serde(default)]
    pub states: BTreeMap<String, RawState>,
    #[serde(default)]
    pub algebras: BTreeMap<String, RawAlgebra>,
    #[serde(default)]
    pub channels: BTreeMap<String, RawChannel>,
    #[serde(default)]
    pub scenarios: BTreeMap<String, RawScenario>,
    #[serde(default)]
    pub tasks: Vec<Task>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawState {
    pub density: RawMatrix,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawAlgebra {
    pub ambient_dim: usize,
    pub generators: Vec<RawMatrix>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChannel {
    pub kraus: Vec<RawMatrix>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub n: usize,
    pub group: GroupSpec,
    pub state: RawVector,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum GroupSpec {
    Named(String),
    Explicit { unitaries: Vec<RawMatrix> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub name: String,
    pub op: String,
    #[serde(default)]
    pub args: BTreeMap<String, String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

fn matrix_from_raw(raw: &RawMatrix) -> Result<ComplexMatrix, CliError> {
    let rows = raw.len();
    if rows == 0 {
        return Err(CliError::user("empty matrix"));
    }
    let cols = raw[0].len();
    if raw.iter().any(|r| r.len() != cols) {
        return Err(CliError::user("ragged matrix rows"));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| {
        Complex64::new(raw[i][j][0], raw[i][j][1])
    }))
}

fn vector_from_raw(raw: &RawVector) -> DVector<Complex64> {
    DVector::from_iterator(raw.len(), raw.iter().map(|z| Complex64::new(z[0], z[1])))
}

/// Fully resolved problem: every named object constructed and validated.
pub struct Resolved {
    pub states: BTreeMap<String, State>,
    pub algebras: BTreeMap<String, MatrixAlgebra>,
    pub channels: BTreeMap<String, Channel>,
    pub scenarios: BTreeMap<String, InclusionScenario>,
    pub tasks: Vec<Task>,
}

pub fn parse(text: &str) -> Result<Resolved, CliError> {
    let file: ProblemFile =
        serde_json::from_str(text).map_err(|e| CliError::user(format!("malformed JSON: {e}")))?;
    if file.version != FORMAT_VERSION {
        return Err(CliError::user(format!(
            "unrecognized format version {:?} (expected {FORMAT_VERSION:?})",
            file.version
        )));
    }

    let mut states = BTreeMap::new();
    for (name, raw) in &file.states {
        let m = matrix_from_raw(&raw.density)?;
        let state = State::from_matrix(m).map_err(CliError::numeric)?;
        states.insert(name.clone(), state);
    }

    let mut algebras = BTreeMap::new();
    for (name, raw) in &file.algebras {
        let gens: Result<Vec<ComplexMatrix>, CliError> =
            raw.generators.iter().map(matrix_from_raw).collect();
        let alg = close_star_algebra(&gens?, raw.ambient_dim).map_err(CliError::numeric)?;
        algebras.insert(name.clone(), alg);
    }

    let mut channels = BTreeMap::new();
    for (name, raw) in &file.channels {
        let kraus: Result<Vec<ComplexMatrix>, CliError> =
            raw.kraus.iter().map(matrix_from_raw).collect();
        let ch = Channel::from_kraus(kraus?).map_err(CliError::numeric)?;
        channels.insert(name.clone(), ch);
    }

    let mut scenarios = BTreeMap::new();
    for (name, raw) in &file.scenarios {
        let psi = vector_from_raw(&raw.state);
        let scn = match &raw.group {
            GroupSpec::Named(g) => {
                let group = g
                    .parse()
                    .map_err(|_| CliError::user(format!("unknown group name: {g}")))?;
                build_named_orbifold(group, raw.n, &psi).map_err(CliError::numeric)?
            }
            GroupSpec::Explicit { unitaries } => {
                let rep: Result<Vec<ComplexMatrix>, CliError> =
                    unitaries.iter().map(matrix_from_raw).collect();
                build_orbifold_inclusion(raw.n, &rep?, &psi).map_err(CliError::numeric)?
            }
        };
        scenarios.insert(name.clone(), scn);
    }

    Ok(Resolved {
        states,
        algebras,
        channels,
        scenarios,
        tasks: file.tasks,
    })
}

impl Resolved {
    pub fn state(&self, name: &str) -> Result<&State, CliError> {
        self.states
            .get(name)
            .ok_or_else(|| CliError::user(format!("unresolved state name: {name}")))
    }

    pub fn algebra(&self, name: &str) -> Result<&MatrixAlgebra, CliError> {
        self.algebras
            .get(name)
            .ok_or_else(|| CliError::user(format!("unresolved algebra name: {name}")))
    }

    pub fn channel(&self, name: &str) -> Result<&Channel, CliError> {
        self.channels
            .get(name)
            .ok_or_else(|| CliError::user(format!("unresolved channel name: {name}")))
    }

    pub fn scenario(&self, name: &str) -> Result<&InclusionScenario, CliError> {
        self.scenarios
            .get(name)
            .ok_or_else(|| CliError::user(format!("unresolved scenario name: {name}")))
    }

    pub fn task(&self, name: &str) -> Result<&Task, CliError> {
        self.tasks
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| CliError::user(format!("unresolved task name: {name}")))
    }
}
