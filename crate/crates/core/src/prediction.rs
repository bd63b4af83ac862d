//! From rollouts to predictions: acceptance probability, acceptance-time
//! samples with their capped variance, and decoded 2D trajectories.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PairOutcome, RolloutSet, SimulatedPair};
use crate::scenario::{decode_to_2d, DecodedPoint, Geometry, Path};

/// Upper bound on the acceptance-time variance used by the losses (s²).
pub const VARIANCE_CAP: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    /// Fraction of rollouts in which the target went first.
    pub a_pred: f64,
    /// Per-rollout acceptance flags, in rollout order.
    pub accepted: Vec<bool>,
    /// Per-rollout target entry times (horizon when it never entered).
    pub acceptance_times: Vec<f64>,
    /// Unbiased sample variance of `acceptance_times`.
    pub raw_variance: f64,
    /// `min(raw_variance, VARIANCE_CAP)`.
    pub variance: f64,
}

/// Acceptance flag and target entry time of a recorded pair.
pub fn extract_outcome(pair: &SimulatedPair) -> (bool, Option<f64>) {
    let target = pair.target.crossing(0.0);
    let ego = pair.ego.crossing(0.0);
    let accepted = match (target, ego) {
        (Some(tt), Some(te)) => tt < te,
        (Some(_), None) => true,
        _ => false,
    };
    (accepted, target)
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// Aggregates rollout outcomes into a prediction record.
pub fn aggregate(rollouts: &RolloutSet) -> Result<PredictionRecord> {
    aggregate_outcomes(&rollouts.outcomes, rollouts.horizon)
}

pub fn aggregate_outcomes(outcomes: &[PairOutcome], horizon: f64) -> Result<PredictionRecord> {
    if outcomes.is_empty() {
        return Err(Error::InvalidConfig("cannot aggregate zero rollouts".into()));
    }
    let accepted: Vec<bool> = outcomes.iter().map(|o| o.accepted).collect();
    let acceptance_times: Vec<f64> = outcomes.iter().map(|o| o.acceptance_time(horizon)).collect();
    let n_acc = accepted.iter().filter(|&&a| a).count();
    if outcomes.len() == 1 {
        warn!("acceptance-time variance undefined for a single rollout, using 0");
    }
    let raw_variance = sample_variance(&acceptance_times);
    Ok(PredictionRecord {
        a_pred: n_acc as f64 / outcomes.len() as f64,
        accepted,
        acceptance_times,
        raw_variance,
        variance: raw_variance.min(VARIANCE_CAP),
    })
}

/// Times `t0 + k·dt` for `k = 1..=n`, with `n` the largest count that
/// stays within `span`.
pub fn prediction_grid(t0: f64, dt: f64, span: f64) -> Vec<f64> {
    let n = (span / dt + 1e-9).floor() as usize;
    (1..=n).map(|k| t0 + k as f64 * dt).collect()
}

/// One decoded 2D target trajectory per recorded rollout, sampled at the
/// absolute `times` (the rollout started at `t0`).
pub fn decode_predictions(
    rollouts: &RolloutSet,
    geometry: &Geometry,
    t0: f64,
    times: &[f64],
) -> Result<Vec<Vec<DecodedPoint>>> {
    if rollouts.pairs.len() != rollouts.outcomes.len() {
        return Err(Error::InvalidConfig(
            "rollouts were simulated without recording trajectories".into(),
        ));
    }
    Ok(rollouts
        .pairs
        .iter()
        .map(|pair| {
            let ds: Vec<(f64, f64)> = times.iter().map(|&t| (t, pair.target.d_at(t - t0))).collect();
            decode_to_2d(&ds, &geometry.target_path, &geometry.contested)
        })
        .collect())
}

/// Decodes a 1D distance profile on `path`; used by the reference predictors.
pub fn decode_profile(
    profile: impl Fn(f64) -> f64,
    path: &Path,
    geometry: &Geometry,
    times: &[f64],
) -> Vec<DecodedPoint> {
    let ds: Vec<(f64, f64)> = times.iter().map(|&t| (t, profile(t))).collect();
    decode_to_2d(&ds, path, &geometry.contested)
}
