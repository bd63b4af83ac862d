//! Evaluation metrics: AUC, TNR under perfect recall, ADE, and the paired
//! t-test used to compare models across splits.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::scenario::Point;

/// When binary predictions were made.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalTime {
    GapOpening,
    CharacteristicGap,
    CriticalDecision,
}

/// Labels and scores for one evaluation timestamp.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryEval {
    pub time: EvalTime,
    pub labels: Vec<bool>,
    pub scores: Vec<f64>,
}

impl BinaryEval {
    pub fn new(time: EvalTime, labels: Vec<bool>, scores: Vec<f64>) -> Result<Self> {
        if labels.len() != scores.len() {
            return Err(Error::LengthMismatch(format!(
                "{} labels, {} scores",
                labels.len(),
                scores.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("score"));
        }
        Ok(Self { time, labels, scores })
    }

    fn split(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (&l, &s) in self.labels.iter().zip(&self.scores) {
            if l {
                pos.push(s);
            } else {
                neg.push(s);
            }
        }
        if pos.is_empty() || neg.is_empty() {
            return Err(Error::MetricUndefined(
                "both classes must be present".into(),
            ));
        }
        Ok((pos, neg))
    }
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half; computed from mid-ranks.
pub fn auc(eval: &BinaryEval) -> Result<f64> {
    let (pos, neg) = eval.split()?;
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // twice the rank sum of positives, kept integral for exactness
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j+1 share the mid-rank (i + j + 2) / 2
        let n_pos = all[i..=j].iter().filter(|x| x.1).count() as u128;
        twice_rank_sum += n_pos * (i + j + 2) as u128;
        i = j + 1;
    }
    let (np, nn) = (pos.len() as u128, neg.len() as u128);
    // 2·U = 2·R − n_p (n_p + 1)
    let twice_u = twice_rank_sum - np * (np + 1);
    Ok(twice_u as f64 / (2 * np * nn) as f64)
}

/// ROC curve points `(fpr, tpr)` from the strictest to the loosest threshold,
/// starting at `(0, 0)` and ending at `(1, 1)`.
pub fn roc_points(eval: &BinaryEval) -> Result<Vec<(f64, f64)>> {
    let (pos, neg) = eval.split()?;
    let mut all: Vec<(f64, bool)> = eval.scores.iter().copied().zip(eval.labels.iter().copied()).collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let mut pts = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < all.len() {
        let s = all[i].0;
        while i < all.len() && all[i].0 == s {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        pts.push((fp as f64 / nn, tp as f64 / np));
    }
    Ok(pts)
}

/// Trapezoidal area under a piecewise-linear curve.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// True-negative rate at the threshold that keeps every positive: the
/// lowest positive score. Negatives count as true negatives only when
/// strictly below it.
pub fn tnr_pr(eval: &BinaryEval) -> Result<f64> {
    let (pos, neg) = eval.split()?;
    let threshold = pos.iter().copied().fold(f64::INFINITY, f64::min);
    let below = neg.iter().filter(|&&s| s < threshold).count();
    Ok(below as f64 / neg.len() as f64)
}

/// Predicted and true 2D trajectories of one sample on shared timestamps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajEval {
    pub times: Vec<f64>,
    pub truth: Vec<Point>,
    /// One trajectory per rollout, each `(t, point)` per timestamp.
    pub predictions: Vec<Vec<(f64, Point)>>,
}

const TIME_TOLERANCE: f64 = 1e-6;

/// Mean over samples of the mean over rollouts of the mean displacement.
pub fn ade(samples: &[TrajEval]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::MetricUndefined("no samples".into()));
    }
    let mut total = 0.0;
    for (k, s) in samples.iter().enumerate() {
        if s.times.is_empty() || s.truth.len() != s.times.len() || s.predictions.is_empty() {
            return Err(Error::MetricUndefined(format!("sample {k}: empty or ragged window")));
        }
        let mut per_sample = 0.0;
        for pred in &s.predictions {
            if pred.len() != s.times.len() {
                return Err(Error::LengthMismatch(format!(
                    "sample {k}: {} predicted points for {} timestamps",
                    pred.len(),
                    s.times.len()
                )));
            }
            let mut sum = 0.0;
            for ((&(tp, p), &t), q) in pred.iter().zip(&s.times).zip(&s.truth) {
                if (tp - t).abs() > TIME_TOLERANCE {
                    return Err(Error::LengthMismatch(format!(
                        "sample {k}: prediction at t = {tp} does not match truth at t = {t}"
                    )));
                }
                sum += p.distance(*q);
            }
            per_sample += sum / s.times.len() as f64;
        }
        total += per_sample / s.predictions.len() as f64;
    }
    Ok(total / samples.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub significant: bool,
    /// Mean of `a − b`.
    pub mean_difference: f64,
}

/// Two-sided paired Student t-test on `a − b`. Zero-variance differences
/// give `t = 0, p = 1` when all are zero and `t = ±∞, p = 0` otherwise.
pub fn paired_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(format!("{} vs {} values", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::MetricUndefined("paired t-test needs at least two pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("paired values"));
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    // differences equal up to rounding count as constant
    let constant = sd <= 1e-12 * (1.0 + mean.abs());
    let (t, p) = if constant {
        if mean == 0.0 || mean.abs() <= 1e-12 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean), 0.0)
        }
    } else {
        let t = mean / (sd / (n as f64).sqrt());
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .map_err(|e| Error::MetricUndefined(e.to_string()))?;
        (t, 2.0 * dist.sf(t.abs()))
    };
    Ok(TTest {
        t,
        p,
        significant: p < alpha,
        mean_difference: mean,
    })
}
