//! Data-driven position-to-joints maps and their evaluation.

mod dataset;
mod regression;
mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, KinematicModel, Position3, JOINTS};

pub use dataset::{generate_dataset, grid_resolution, meta_path, split_dataset, Dataset, DatasetMeta, DatasetRow};
pub use regression::{fit_linear, fit_polynomial, monomial_exponents, LinearModel, PolynomialModel};
pub use tree::{fit_tree, Node, RegressionTree, TreeConfig};

/// Version written into every model file.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Any trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Linear(LinearModel),
    Polynomial(PolynomialModel),
    Tree(RegressionTree),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    #[serde(flatten)]
    model: TrainedModel,
}

impl TrainedModel {
    pub fn predict(&self, position: &Position3) -> JointVector {
        match self {
            TrainedModel::Linear(m) => m.predict(position),
            TrainedModel::Polynomial(m) => m.predict(position),
            TrainedModel::Tree(m) => m.predict(position),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::Linear(_) => "linear",
            TrainedModel::Polynomial(_) => "polynomial",
            TrainedModel::Tree(_) => "tree",
        }
    }

    pub fn into_tree(self) -> Result<RegressionTree> {
        match self {
            TrainedModel::Tree(t) => Ok(t),
            other => Err(Error::MissingModel(format!(
                "expected a regression tree, found a {} model",
                other.kind()
            ))),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::MissingModel(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        if let TrainedModel::Tree(t) = &file.model {
            t.validate()?;
        }
        Ok(file.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    /// Reads a model file; a missing or unreadable file is a [`Error::MissingModel`].
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::MissingModel(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(inner) => Error::Parse {
                path: path.to_path_buf(),
                message: inner.to_string(),
            },
            other => other,
        })
    }
}

/// Quality of a model on held-out rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    /// Absolute value of the per-joint mean coefficient of determination.
    pub r_squared: f64,
    pub r_squared_signed: f64,
    /// Mean squared joint error (rad²) against the wrapped true angles.
    pub mse: f64,
    /// Mean of `|e^{iθ̂} − e^{iθ}|²` over joints and rows, the error the tree minimises.
    pub chord_mse: f64,
    /// Mean distance (mm) between the target and the FK of the prediction.
    pub average_fitness: f64,
}

/// Coefficient of determination averaged over the joints, MSE and average
/// position error of `predict` on `rows`.
pub fn evaluate<F>(predict: F, rows: &[DatasetRow], model: &KinematicModel) -> Result<ModelMetrics>
where
    F: Fn(&Position3) -> JointVector,
{
    if rows.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let n = rows.len() as f64;
    let truth: Vec<JointVector> = rows.iter().map(|r| r.joints.wrapped()).collect();
    let preds: Vec<JointVector> = rows.iter().map(|r| predict(&r.position)).collect();
    let mut means = [0.0; JOINTS];
    for t in &truth {
        for j in 0..JOINTS {
            means[j] += t[j] / n;
        }
    }
    let mut ss_res = [0.0; JOINTS];
    let mut ss_tot = [0.0; JOINTS];
    let mut fitness = 0.0;
    let mut chord = 0.0;
    for ((t, p), row) in truth.iter().zip(&preds).zip(rows) {
        for j in 0..JOINTS {
            chord += 2.0 - 2.0 * (p[j] - t[j]).cos();
            ss_res[j] += (p[j] - t[j]).powi(2);
            ss_tot[j] += (t[j] - means[j]).powi(2);
        }
        fitness += model.fitness(p, &row.position);
    }
    let r2: f64 = (0..JOINTS)
        .map(|j| {
            if ss_tot[j] > 0.0 {
                1.0 - ss_res[j] / ss_tot[j]
            } else if ss_res[j] == 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .sum::<f64>()
        / JOINTS as f64;
    Ok(ModelMetrics {
        r_squared: r2.abs(),
        r_squared_signed: r2,
        mse: ss_res.iter().sum::<f64>() / (n * JOINTS as f64),
        chord_mse: chord / (n * JOINTS as f64),
        average_fitness: fitness / n,
    })
}

/// Mean distance (mm) between each target and the FK of the prediction for it.
pub fn average_fitness<F>(predict: F, targets: &[Position3], model: &KinematicModel) -> Result<f64>
where
    F: Fn(&Position3) -> JointVector,
{
    if targets.is_empty() {
        return Err(Error::Empty("target set"));
    }
    let total: f64 = targets.iter().map(|t| model.fitness(&predict(t), t)).sum();
    Ok(total / targets.len() as f64)
}
