//! Logistic-regression baselines on 1D or 2D inputs, and a constant-velocity
//! trajectory predictor.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prediction::decode_profile;
use crate::scenario::{DecodedPoint, Geometry, ProjectedState, Sample};

/// Gap-time feature used when the ego is not moving (s).
pub const DEFAULT_GAP_CAP: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Schema {
    /// Projected distances and speeds plus the ego's time to arrival.
    OneD,
    /// Raw positions of the observation window and final velocity
    /// components of both agents.
    TwoD,
}

impl Schema {
    pub fn len(self, n_i: usize) -> usize {
        match self {
            Schema::OneD => 5,
            Schema::TwoD => 2 * (2 * n_i + 2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub schema: Schema,
    pub values: Vec<f64>,
}

/// Features of `sample` from the `n_i` observations up to `t_eval`.
pub fn featurize(
    sample: &Sample,
    schema: Schema,
    t_eval: f64,
    n_i: usize,
    lateral_tolerance: f64,
    gap_cap: f64,
) -> Result<FeatureVector> {
    let values = match schema {
        Schema::OneD => {
            let (_, ego, target) = sample.initial_conditions_at(t_eval, n_i, lateral_tolerance)?;
            one_d(ego, target, gap_cap)
        }
        Schema::TwoD => {
            let w = sample.window(t_eval, n_i)?;
            let mut v = Vec::with_capacity(schema.len(n_i));
            for track in [w.ego, w.target] {
                for p in track {
                    v.push(p.pos.x);
                    v.push(p.pos.y);
                }
            }
            for track in [w.ego, w.target] {
                let (a, b) = (track[track.len() - 2], track[track.len() - 1]);
                let dt = b.t - a.t;
                if !(dt > 0.0) {
                    return Err(Error::DegenerateWindow(format!("sample {}", sample.id)));
                }
                v.push((b.pos.x - a.pos.x) / dt);
                v.push((b.pos.y - a.pos.y) / dt);
            }
            v
        }
    };
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("feature"));
    }
    Ok(FeatureVector { schema, values })
}

pub fn one_d(ego: ProjectedState, target: ProjectedState, gap_cap: f64) -> Vec<f64> {
    let gap = if ego.v > 0.0 {
        (ego.d / ego.v).min(gap_cap)
    } else {
        gap_cap
    };
    vec![ego.d, ego.v, target.d, target.v, gap]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub schema: Schema,
    /// Bias first, then one weight per standardized feature.
    pub weights: Vec<f64>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrFit {
    pub model: LrModel,
    /// Penalized negative log-likelihood after each iteration.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

const MAX_IRLS_ITERATIONS: usize = 100;
const GRADIENT_TOLERANCE: f64 = 1e-8;

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn objective(x: &DMatrix<f64>, y: &[f64], w: &DVector<f64>, lambda: f64) -> f64 {
    let z = x * w;
    let nll: f64 = z.iter().zip(y).map(|(&z, &y)| softplus(z) - y * z).sum();
    let penalty: f64 = w.iter().skip(1).map(|v| v * v).sum();
    nll + 0.5 * lambda * penalty
}

/// L2-penalized logistic regression by iteratively reweighted least squares
/// with step halving. Features are standardized; the bias is not penalized.
/// Converged once the gradient norm per sample falls below 1e-8.
pub fn lr_fit(features: &[FeatureVector], labels: &[bool], lambda: f64) -> Result<LrFit> {
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch(format!(
            "{} feature vectors, {} labels",
            features.len(),
            labels.len()
        )));
    }
    if features.len() < 2 || labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
        return Err(Error::NotEnoughSamples(
            "need at least two samples and both classes".into(),
        ));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig("regularization must be non-negative".into()));
    }
    let schema = features[0].schema;
    let k = features[0].values.len();
    if features.iter().any(|f| f.schema != schema || f.values.len() != k) {
        return Err(Error::InvalidConfig("mixed feature schemas".into()));
    }
    let n = features.len();
    let mut mean = vec![0.0; k];
    let mut scale = vec![0.0; k];
    for j in 0..k {
        mean[j] = features.iter().map(|f| f.values[j]).sum::<f64>() / n as f64;
        let var = features.iter().map(|f| (f.values[j] - mean[j]).powi(2)).sum::<f64>() / n as f64;
        scale[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let x = DMatrix::from_fn(n, k + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            (features[i].values[j - 1] - mean[j - 1]) / scale[j - 1]
        }
    });
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l))).collect();
    let mut w = DVector::zeros(k + 1);
    let mut obj = objective(&x, &y, &w, lambda);
    let mut trace = vec![obj];
    for it in 0..MAX_IRLS_ITERATIONS {
        let z = &x * &w;
        let p: Vec<f64> = z.iter().map(|&z| sigmoid(z)).collect();
        let mut grad = x.transpose() * DVector::from_iterator(n, p.iter().zip(&y).map(|(p, y)| p - y));
        let mut hess = x.transpose() * DMatrix::from_fn(n, k + 1, |i, j| x[(i, j)] * p[i] * (1.0 - p[i]));
        for j in 1..=k {
            grad[j] += lambda * w[j];
            hess[(j, j)] += lambda;
        }
        let gnorm = grad.norm();
        if gnorm < GRADIENT_TOLERANCE * n as f64 {
            return Ok(LrFit {
                model: LrModel {
                    schema,
                    weights: w.iter().copied().collect(),
                    mean,
                    scale,
                },
                objective_trace: trace,
                iterations: it,
            });
        }
        let step = match hess.clone().cholesky() {
            Some(c) => c.solve(&grad),
            None => hess.lu().solve(&grad).unwrap_or_else(|| grad.clone()),
        };
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let cand = &w - t * &step;
            let c_obj = objective(&x, &y, &cand, lambda);
            if c_obj <= obj {
                w = cand;
                obj = c_obj;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        trace.push(obj);
        if !accepted {
            return Err(Error::NotConverged {
                iterations: it + 1,
                grad_norm: gnorm,
                trace,
            });
        }
    }
    let z = &x * &w;
    let mut grad = x.transpose() * DVector::from_iterator(n, z.iter().zip(&y).map(|(&z, y)| sigmoid(z) - y));
    for j in 1..=k {
        grad[j] += lambda * w[j];
    }
    Err(Error::NotConverged {
        iterations: MAX_IRLS_ITERATIONS,
        grad_norm: grad.norm(),
        trace,
    })
}

/// Probabilities are kept inside `[ε, 1 − ε]`.
pub const PROBABILITY_EPS: f64 = 1e-12;

pub fn lr_predict(model: &LrModel, features: &FeatureVector) -> Result<f64> {
    if features.schema != model.schema || features.values.len() + 1 != model.weights.len() {
        return Err(Error::InvalidConfig(format!(
            "feature schema {:?} with {} values does not match the model",
            features.schema,
            features.values.len()
        )));
    }
    let z = model.weights[0]
        + features
            .values
            .iter()
            .zip(&model.mean)
            .zip(&model.scale)
            .zip(&model.weights[1..])
            .map(|(((v, m), s), w)| w * (v - m) / s)
            .sum::<f64>();
    Ok(sigmoid(z).clamp(PROBABILITY_EPS, 1.0 - PROBABILITY_EPS))
}

/// Target trajectory at constant speed along its path from the state at `t0`.
pub fn cv_predict(
    geometry: &Geometry,
    target: ProjectedState,
    t0: f64,
    times: &[f64],
) -> Vec<DecodedPoint> {
    let v = target.v.max(0.0);
    decode_profile(|t| target.d - v * (t - t0), &geometry.target_path, geometry, times)
}
