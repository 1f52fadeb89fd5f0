//! JSON interchange for state tuples and line-delimited reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, ComplexMatrix, HermitianMatrix};
use crate::states::{DensityMatrix, StateTuple, STATE_TOL};

pub const SCHEMA_VERSION: u32 = 1;

/// Deviation from a state tolerated (and repaired) in the default mode.
pub const REPAIR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixGrid {
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateTupleFile {
    pub schema_version: u32,
    pub dim: usize,
    pub states: Vec<MatrixGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// Symmetrize, clamp small negative eigenvalues and renormalize.
    #[default]
    Repair,
    /// Reject anything further than `1e-10` from a density matrix.
    Strict,
}

fn grid_to_matrix(g: &MatrixGrid, d: usize, index: usize) -> Result<ComplexMatrix> {
    let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
    if !shape_ok(&g.re) || !shape_ok(&g.im) {
        return Err(Error::dims(format!("state {index} is not {d}×{d}")));
    }
    Ok(ComplexMatrix::from_fn(d, d, |i, j| c64(g.re[i][j], g.im[i][j])))
}

impl StateTupleFile {
    pub fn from_tuple(t: &StateTuple, labels: Option<Vec<String>>) -> Self {
        let d = t.dim();
        let states = t
            .states()
            .iter()
            .map(|s| {
                let m = s.matrix();
                MatrixGrid {
                    re: (0..d).map(|i| (0..d).map(|j| m[(i, j)].re).collect()).collect(),
                    im: (0..d).map(|i| (0..d).map(|j| m[(i, j)].im).collect()).collect(),
                }
            })
            .collect();
        StateTupleFile { schema_version: SCHEMA_VERSION, dim: d, states, labels }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Canonical text: pretty JSON in field order with shortest round-trip
    /// number formatting, newline terminated.
    pub fn to_canonical_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn to_tuple(&self, strictness: Strictness) -> Result<StateTuple> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invariant(
                "schema version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        if let Some(l) = &self.labels {
            if l.len() != self.states.len() {
                return Err(Error::dims(format!("{} labels for {} states", l.len(), self.states.len())));
            }
        }
        let mut states = Vec::with_capacity(self.states.len());
        for (k, g) in self.states.iter().enumerate() {
            let m = grid_to_matrix(g, self.dim, k)?;
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::invariant("finite entries", format!("state {k}")));
            }
            let state = match strictness {
                Strictness::Strict => {
                    let defect = HermitianMatrix::hermiticity_defect(&m);
                    if defect > STATE_TOL {
                        return Err(Error::invariant("hermiticity", format!("state {k} has defect {defect:e}")));
                    }
                    DensityMatrix::from_matrix(m)
                }
                Strictness::Repair => {
                    let defect = HermitianMatrix::hermiticity_defect(&m);
                    if defect > REPAIR_TOL {
                        return Err(Error::invariant("hermiticity", format!("state {k} has defect {defect:e}")));
                    }
                    DensityMatrix::repaired(HermitianMatrix::new(m)?, REPAIR_TOL)
                }
            };
            states.push(state.map_err(|e| match e {
                Error::Invariant { invariant, detail } => {
                    Error::Invariant { invariant, detail: format!("state {k}: {detail}") }
                }
                other => other,
            })?);
        }
        StateTuple::new(states)
    }
}

pub fn read_tuple(text: &str, strictness: Strictness) -> Result<StateTuple> {
    StateTupleFile::parse(text)?.to_tuple(strictness)
}

/// One JSON record per line, LF terminated.
pub fn to_record_line<T: Serialize>(record: &T) -> String {
    let mut s = serde_json::to_string(record).expect("serializable");
    s.push('\n');
    s
}
