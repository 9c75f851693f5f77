use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LtiPlant, NoiseModel, PlantError};
use crate::spectral::Matrix;

/// On-disk plant: row-major `A` and `B` at full double precision. When `k`
/// is present the spectral oracle is rebuilt from `A` on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantFile {
    pub n: usize,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub synthetic: bool,
}

fn rows(x: &Matrix) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], r: usize, c: usize, name: &str) -> Result<Matrix, PlantError> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c) {
        return Err(PlantError::Format(format!("{name} must be {r}x{c}")));
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

impl PlantFile {
    pub fn from_plant(plant: &LtiPlant, seed: Option<u64>) -> Self {
        PlantFile {
            n: plant.n(),
            m: plant.m(),
            k: plant.truth.as_ref().map(|t| t.k),
            a: rows(&plant.a),
            b: rows(&plant.b),
            noise: plant.noise,
            seed,
            synthetic: plant.truth.is_some(),
        }
    }

    pub fn to_plant(&self) -> Result<LtiPlant, PlantError> {
        let a = from_rows(&self.a, self.n, self.n, "A")?;
        let b = from_rows(&self.b, self.n, self.m, "B")?;
        let plant = LtiPlant::new(a, b, self.noise)?;
        match (self.synthetic, self.k) {
            (_, Some(k)) => plant.with_truth(k),
            (true, None) => Err(PlantError::Format("synthetic plant without k".into())),
            (false, None) => Ok(plant),
        }
    }

    pub fn load(path: &Path) -> Result<Self, PlantError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PlantError::Format(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| PlantError::Format(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), PlantError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| PlantError::Format(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| PlantError::Format(format!("{}: {e}", path.display())))
    }
}
