//! JSON model format.
//!
//! ```text
//! { "S": .., "A": .., "O": .., "H": ..,
//!   "mu1": [S],
//!   "trans": [H-1][A][S][S]   // trans[h][a][s_next][s_cur]
//!   "emis": [H][O][S],
//!   "rewards": [H][O],
//!   "metadata": { .. }        // optional, ignored on load
//! }
//! ```

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::{Dims, TabularPomdp};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(rename = "S")]
    pub states: usize,
    #[serde(rename = "A")]
    pub actions: usize,
    #[serde(rename = "O")]
    pub observations: usize,
    #[serde(rename = "H")]
    pub horizon: usize,
    pub mu1: Vec<f64>,
    pub trans: Vec<Vec<Vec<Vec<f64>>>>,
    pub emis: Vec<Vec<Vec<f64>>>,
    pub rewards: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

fn matrix_from_rows(location: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch(format!(
            "{location}: expected {nrows}x{ncols} nested array"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl ModelFile {
    pub fn from_model(model: &TabularPomdp, metadata: Option<serde_json::Value>) -> Self {
        let d = model.dims();
        ModelFile {
            states: d.states,
            actions: d.actions,
            observations: d.observations,
            horizon: d.horizon,
            mu1: model.mu1().iter().copied().collect(),
            trans: model
                .all_trans()
                .iter()
                .map(|per_a| per_a.iter().map(matrix_to_rows).collect())
                .collect(),
            emis: model.all_emis().iter().map(matrix_to_rows).collect(),
            rewards: (0..d.horizon).map(|h| model.rewards(h).to_vec()).collect(),
            metadata,
        }
    }

    pub fn into_model(self) -> Result<TabularPomdp> {
        let dims = Dims::new(self.states, self.actions, self.observations, self.horizon);
        if dims.horizon == 0 {
            return Err(Error::DimensionMismatch("H: must be positive".into()));
        }
        if self.trans.len() != dims.horizon - 1 {
            return Err(Error::DimensionMismatch(format!(
                "trans: {} steps != H-1={}",
                self.trans.len(),
                dims.horizon - 1
            )));
        }
        let mut trans = Vec::with_capacity(self.trans.len());
        for (h, per_a) in self.trans.iter().enumerate() {
            if per_a.len() != dims.actions {
                return Err(Error::DimensionMismatch(format!(
                    "trans[{h}]: {} actions != A={}",
                    per_a.len(),
                    dims.actions
                )));
            }
            let mut row = Vec::with_capacity(per_a.len());
            for (a, rows) in per_a.iter().enumerate() {
                row.push(matrix_from_rows(&format!("trans[{h}][{a}]"), rows, dims.states, dims.states)?);
            }
            trans.push(row);
        }
        let emis = self
            .emis
            .iter()
            .enumerate()
            .map(|(h, rows)| matrix_from_rows(&format!("emis[{h}]"), rows, dims.observations, dims.states))
            .collect::<Result<Vec<_>>>()?;
        TabularPomdp::new(dims, DVector::from_vec(self.mu1), trans, emis, self.rewards)
    }
}

impl TabularPomdp {
    pub fn to_json(&self, metadata: Option<serde_json::Value>) -> String {
        serde_json::to_string_pretty(&ModelFile::from_model(self, metadata)).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_model()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>, metadata: Option<serde_json::Value>) -> Result<()> {
        std::fs::write(path, self.to_json(metadata))?;
        Ok(())
    }
}
