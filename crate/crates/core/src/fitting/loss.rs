//! Training losses over per-sample predictions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prediction::PredictionRecord;
use crate::scenario::Outcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LossKind {
    L1,
    L2,
}

/// Predicted acceptance time clipped below by `t_C` and, for accepted gaps,
/// above by `t_A`.
#[inline]
pub fn clipped_time(truth: &Outcome, t_pred: f64) -> f64 {
    let lower = t_pred.max(truth.t_contested);
    match truth.t_accept {
        Some(t_a) => lower.min(t_a),
        None => lower,
    }
}

/// `t_A` for accepted gaps, `t_C` otherwise.
#[inline]
pub fn reference_time(truth: &Outcome) -> f64 {
    match (truth.accepted, truth.t_accept) {
        (true, Some(t_a)) => t_a,
        _ => truth.t_contested,
    }
}

/// Spread regularizer `100 V − 20 √V + 1`, i.e. `(10 √V − 1)²`.
#[inline]
pub fn variance_regularizer(v: f64) -> f64 {
    100.0 * v - 20.0 * v.sqrt() + 1.0
}

fn check(predictions: &[PredictionRecord], truth: &[Outcome]) -> Result<()> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch(format!(
            "{} predictions for {} ground-truth samples",
            predictions.len(),
            truth.len()
        )));
    }
    for (i, (p, t)) in predictions.iter().zip(truth).enumerate() {
        if !t.t_contested.is_finite() {
            return Err(Error::MissingTruth(format!("index {i}: t_C")));
        }
        if t.accepted && t.t_accept.is_none() {
            return Err(Error::MissingTruth(format!("index {i}: t_A")));
        }
        if p.accepted.is_empty() || p.accepted.len() != p.acceptance_times.len() {
            return Err(Error::LengthMismatch(format!(
                "index {i}: prediction has no rollouts or mismatched rollout vectors"
            )));
        }
    }
    Ok(())
}

/// `Σ_i (1/n_p) Σ_p [4·|a_i − a_p| + (t_i − t̃_p)²]`.
pub fn loss_l1(predictions: &[PredictionRecord], truth: &[Outcome]) -> Result<f64> {
    check(predictions, truth)?;
    Ok(predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| {
            let a = f64::from(u8::from(t.accepted));
            let t_ref = reference_time(t);
            let sum: f64 = p
                .accepted
                .iter()
                .zip(&p.acceptance_times)
                .map(|(&ap, &tp)| {
                    let dt = t_ref - clipped_time(t, tp);
                    4.0 * (a - f64::from(u8::from(ap))).abs() + dt * dt
                })
                .sum();
            sum / p.accepted.len() as f64
        })
        .sum())
}

/// `L1 + Σ_i (100 V_i − 20 √V_i + 1)` with the capped variances.
pub fn loss_l2(predictions: &[PredictionRecord], truth: &[Outcome]) -> Result<f64> {
    let l1 = loss_l1(predictions, truth)?;
    Ok(l1 + predictions.iter().map(|p| variance_regularizer(p.variance)).sum::<f64>())
}

pub fn loss(kind: LossKind, predictions: &[PredictionRecord], truth: &[Outcome]) -> Result<f64> {
    match kind {
        LossKind::L1 => loss_l1(predictions, truth),
        LossKind::L2 => loss_l2(predictions, truth),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prediction::{sample_variance, VARIANCE_CAP};

    fn record(xs: &[(bool, f64)]) -> PredictionRecord {
        let times: Vec<f64> = xs.iter().map(|x| x.1).collect();
        let raw = sample_variance(&times);
        PredictionRecord {
            a_pred: xs.iter().filter(|x| x.0).count() as f64 / xs.len() as f64,
            accepted: xs.iter().map(|x| x.0).collect(),
            acceptance_times: times,
            raw_variance: raw,
            variance: raw.min(VARIANCE_CAP),
        }
    }

    fn accepted(t_a: f64, t_c: f64) -> Outcome {
        Outcome {
            accepted: true,
            t_accept: Some(t_a),
            t_contested: t_c,
        }
    }

    #[test]
    fn hand_evaluated_fixture() {
        let p = record(&[(true, 2.5), (false, 3.5)]);
        let l = loss_l1(&[p], &[accepted(3.0, 2.0)]).unwrap();
        assert!((l - 2.125).abs() < 1e-12);
    }

    #[test]
    fn binary_term_only() {
        let l = loss_l1(&[record(&[(false, 3.0)])], &[accepted(3.0, 2.0)]).unwrap();
        assert_eq!(l, 4.0);
    }

    #[test]
    fn perfect_prediction_is_zero() {
        let rejected = Outcome {
            accepted: false,
            t_accept: None,
            t_contested: 4.0,
        };
        let l = loss_l1(&[record(&[(false, 3.0), (false, 4.0)])], &[rejected]).unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn regularizer_values() {
        assert_eq!(variance_regularizer(0.01), 0.0);
        assert_eq!(variance_regularizer(0.0), 1.0);
        assert!((variance_regularizer(0.0025) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn missing_t_c_is_an_error() {
        let t = Outcome {
            accepted: false,
            t_accept: None,
            t_contested: f64::NAN,
        };
        assert!(loss_l1(&[record(&[(false, 1.0)])], &[t]).is_err());
    }
}
