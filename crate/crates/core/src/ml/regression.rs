use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointVector, Position3, JOINTS};
use crate::ml::dataset::DatasetRow;
use crate::numeric::SINGULAR_VALUE_CUTOFF;

/// Least-squares fit of centred features against centred (wrapped) joints.
/// Returns per-feature weight rows, the intercept and a rank-deficiency flag.
fn least_squares<F>(rows: &[DatasetRow], n_features: usize, features: F) -> (Vec<[f64; JOINTS]>, [f64; JOINTS], bool)
where
    F: Fn(&Position3, &mut [f64]),
{
    let n = rows.len() as f64;
    let mut phi = vec![0.0; n_features];
    let mut phi_mean = DVector::<f64>::zeros(n_features);
    let mut y_mean = [0.0; JOINTS];
    for row in rows {
        features(&row.position, &mut phi);
        for (m, v) in phi_mean.iter_mut().zip(&phi) {
            *m += v / n;
        }
        for (m, v) in y_mean.iter_mut().zip(row.joints.wrapped().iter()) {
            *m += v / n;
        }
    }

    let mut gram = DMatrix::<f64>::zeros(n_features, n_features);
    let mut cross = DMatrix::<f64>::zeros(n_features, JOINTS);
    for row in rows {
        features(&row.position, &mut phi);
        let centred = DVector::from_iterator(n_features, phi.iter().zip(phi_mean.iter()).map(|(a, b)| a - b));
        gram.ger(1.0, &centred, &centred, 1.0);
        let y = row.joints.wrapped();
        for j in 0..JOINTS {
            let yc = y[j] - y_mean[j];
            for f in 0..n_features {
                cross[(f, j)] += centred[f] * yc;
            }
        }
    }

    let svd = gram.svd(true, true);
    let largest = svd.singular_values.max();
    let cutoff = (largest * SINGULAR_VALUE_CUTOFF).max(f64::MIN_POSITIVE);
    let rank_deficient = svd.singular_values.iter().any(|&s| s <= cutoff);
    let beta = svd.solve(&cross, cutoff).expect("U and V were computed");

    let weights: Vec<[f64; JOINTS]> = (0..n_features)
        .map(|f| std::array::from_fn(|j| beta[(f, j)]))
        .collect();
    let intercept = std::array::from_fn(|j| y_mean[j] - (0..n_features).map(|f| beta[(f, j)] * phi_mean[f]).sum::<f64>());
    (weights, intercept, rank_deficient)
}

fn affine(weights: &[[f64; JOINTS]], intercept: &[f64; JOINTS], phi: &[f64]) -> JointVector {
    let mut q = JointVector::new(*intercept);
    for (w, v) in weights.iter().zip(phi) {
        for j in 0..JOINTS {
            q[j] += w[j] * v;
        }
    }
    q.wrapped()
}

/// Affine map from position to joints, one head per joint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// `weights[k][j]`: coefficient of coordinate k (x, y, z) for joint j.
    pub weights: [[f64; JOINTS]; 3],
    pub intercept: [f64; JOINTS],
    pub rank_deficient: bool,
}

pub fn fit_linear(train: &[DatasetRow]) -> Result<LinearModel> {
    if train.len() < 4 {
        return Err(Error::config("linear regression needs at least 4 rows"));
    }
    let (w, intercept, rank_deficient) = least_squares(train, 3, |p, out| out.copy_from_slice(&p.as_array()));
    Ok(LinearModel {
        weights: [w[0], w[1], w[2]],
        intercept,
        rank_deficient,
    })
}

impl LinearModel {
    pub fn predict(&self, position: &Position3) -> JointVector {
        affine(&self.weights, &self.intercept, &position.as_array())
    }
}

/// Exponent triples `(i, j, k)` with `1 ≤ i + j + k ≤ degree`, graded order.
pub fn monomial_exponents(degree: usize) -> Vec<[u8; 3]> {
    let mut out = Vec::new();
    for total in 1..=degree {
        for i in (0..=total).rev() {
            for j in (0..=total - i).rev() {
                out.push([i as u8, j as u8, (total - i - j) as u8]);
            }
        }
    }
    out
}

/// Least squares on every monomial of the standardised coordinates up to
/// total degree `degree`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialModel {
    pub degree: usize,
    pub input_mean: [f64; 3],
    pub input_scale: [f64; 3],
    pub exponents: Vec<[u8; 3]>,
    pub weights: Vec<[f64; JOINTS]>,
    pub intercept: [f64; JOINTS],
    pub rank_deficient: bool,
}

fn expand(exponents: &[[u8; 3]], degree: usize, mean: &[f64; 3], scale: &[f64; 3], p: &Position3, out: &mut [f64]) {
    let s = p.as_array();
    let powers: [Vec<f64>; 3] = std::array::from_fn(|k| {
        let u = (s[k] - mean[k]) / scale[k];
        std::iter::successors(Some(1.0), |v| Some(v * u)).take(degree + 1).collect()
    });
    for (slot, e) in out.iter_mut().zip(exponents) {
        *slot = powers[0][e[0] as usize] * powers[1][e[1] as usize] * powers[2][e[2] as usize];
    }
}

pub fn fit_polynomial(train: &[DatasetRow], degree: usize) -> Result<PolynomialModel> {
    if degree == 0 || degree > u8::MAX as usize {
        return Err(Error::config("polynomial degree must lie in 1..=255"));
    }
    let exponents = monomial_exponents(degree);
    if train.len() <= exponents.len() {
        return Err(Error::config(format!(
            "degree {degree} needs more than {} training rows",
            exponents.len()
        )));
    }
    let n = train.len() as f64;
    let mut mean = [0.0; 3];
    for row in train {
        for (m, v) in mean.iter_mut().zip(row.position.as_array()) {
            *m += v / n;
        }
    }
    let mut scale = [0.0; 3];
    for row in train {
        for k in 0..3 {
            scale[k] += (row.position.as_array()[k] - mean[k]).powi(2) / n;
        }
    }
    let scale = scale.map(|v| if v > 0.0 { v.sqrt() } else { 1.0 });
    let (weights, intercept, rank_deficient) = least_squares(train, exponents.len(), |p, out| {
        expand(&exponents, degree, &mean, &scale, p, out)
    });
    Ok(PolynomialModel {
        degree,
        input_mean: mean,
        input_scale: scale,
        exponents,
        weights,
        intercept,
        rank_deficient,
    })
}

impl PolynomialModel {
    pub fn predict(&self, position: &Position3) -> JointVector {
        let mut phi = vec![0.0; self.exponents.len()];
        expand(&self.exponents, self.degree, &self.input_mean, &self.input_scale, position, &mut phi);
        affine(&self.weights, &self.intercept, &phi)
    }
}
