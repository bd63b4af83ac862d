//! Split-wise evaluation of the cognitive model and the baselines, and
//! pairwise comparison of evaluation reports.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{cv_predict, featurize, lr_fit, lr_predict, FeatureVector, Schema, DEFAULT_GAP_CAP};
use crate::datasets::{Dataset, Split, SplitKind, SplitPlan};
use crate::error::{Error, Result};
use crate::fitting::{fit, FitConfig, FitResult, TrainingItem};
use crate::metrics::{ade, auc, paired_t_test, roc_points, tnr_pr, BinaryEval, EvalTime, TTest, TrajEval};
use crate::model::{simulate_batch_outcomes, BatchItem, Detail, ModelParams, SimConfig};
use crate::prediction::{aggregate, decode_predictions};
use crate::scenario::{Point, Sample, DEFAULT_LATERAL_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    CM,
    LR1D,
    LR2D,
    CV,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [ModelId::CM, ModelId::LR1D, ModelId::LR2D, ModelId::CV];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::CM => "CM",
            ModelId::LR1D => "LR1D",
            ModelId::LR2D => "LR2D",
            ModelId::CV => "CV",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model `{s}`; valid: CM, LR1D, LR2D, CV")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    AucGapOpening,
    AucCharacteristic,
    AdeCharacteristic,
    TnrPrCritical,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::AucGapOpening,
        Metric::AucCharacteristic,
        Metric::AdeCharacteristic,
        Metric::TnrPrCritical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::AucGapOpening => "auc_gap_opening",
            Metric::AucCharacteristic => "auc_characteristic",
            Metric::AdeCharacteristic => "ade_characteristic",
            Metric::TnrPrCritical => "tnr_pr_critical",
        }
    }

    pub fn time(self) -> EvalTime {
        match self {
            Metric::AucGapOpening => EvalTime::GapOpening,
            Metric::AucCharacteristic | Metric::AdeCharacteristic => EvalTime::CharacteristicGap,
            Metric::TnrPrCritical => EvalTime::CriticalDecision,
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::AdeCharacteristic)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn time_name(time: EvalTime) -> &'static str {
    match time {
        EvalTime::GapOpening => "gap_opening",
        EvalTime::CharacteristicGap => "characteristic",
        EvalTime::CriticalDecision => "critical",
    }
}

/// Absolute timestamp of `time` in `sample`.
pub fn eval_timestamp(sample: &Sample, time: EvalTime) -> f64 {
    match time {
        EvalTime::GapOpening => sample.times.gap_open,
        EvalTime::CharacteristicGap => sample.times.characteristic,
        EvalTime::CriticalDecision => sample.times.critical,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Observations per input window.
    pub n_i: usize,
    pub lateral_tolerance: f64,
    pub gap_cap: f64,
    /// Logistic-regression penalty.
    pub lambda: f64,
    /// Length of the trajectory window after the prediction time (s).
    pub ade_horizon: f64,
    pub n_p: usize,
    pub seed: u64,
    pub sim: SimConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            n_i: 2,
            lateral_tolerance: DEFAULT_LATERAL_TOLERANCE,
            gap_cap: DEFAULT_GAP_CAP,
            lambda: 1.0,
            ade_horizon: 3.0,
            n_p: 100,
            seed: 0,
            sim: SimConfig::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.n_i < 2 {
            return Err(Error::InvalidConfig("n_i must be at least 2".into()));
        }
        if self.n_p == 0 {
            return Err(Error::InvalidConfig("n_p must be at least 1".into()));
        }
        if !(self.ade_horizon > 0.0) {
            return Err(Error::InvalidConfig("ADE horizon must be positive".into()));
        }
        Ok(())
    }
}

/// Why `sample` cannot be evaluated at `time`, if it cannot.
pub fn not_evaluable(sample: &Sample, time: EvalTime, n_i: usize) -> Option<String> {
    let t = eval_timestamp(sample, time);
    let o = &sample.outcome;
    if t < sample.times.gap_open - 1e-9 {
        return Some("timestamp precedes gap opening".into());
    }
    if t >= o.t_contested {
        return Some("ego already reached the contested space".into());
    }
    if o.t_accept.is_some_and(|t_a| t_a <= t) {
        return Some("gap already accepted".into());
    }
    sample.window(t, n_i).err().map(|e| e.to_string())
}

/// The model to evaluate: fitted CM parameters or a baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelSpec {
    Cm(ModelParams),
    Lr(Schema),
    Cv,
}

impl ModelSpec {
    pub fn id(&self) -> ModelId {
        match self {
            ModelSpec::Cm(_) => ModelId::CM,
            ModelSpec::Lr(Schema::OneD) => ModelId::LR1D,
            ModelSpec::Lr(Schema::TwoD) => ModelId::LR2D,
            ModelSpec::Cv => ModelId::CV,
        }
    }
}

/// One prediction for one test sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePrediction {
    pub id: String,
    pub time: EvalTime,
    pub t0: f64,
    pub label: bool,
    pub a_pred: f64,
    /// Mean ADE over rollouts, when trajectories were requested.
    pub ade: Option<f64>,
}

fn trajectory_window(sample: &Sample, t0: f64, horizon: f64) -> (Vec<f64>, Vec<Point>) {
    let path = &sample.geometry.target_path;
    let end = path.length() - 1e-9;
    let mut times = Vec::new();
    let mut truth = Vec::new();
    for p in &sample.target_track {
        if p.t <= t0 + 1e-9 {
            continue;
        }
        if p.t > t0 + horizon + 1e-9 || path.foot_point(p.pos).0 >= end {
            break;
        }
        times.push(p.t);
        truth.push(p.pos);
    }
    (times, truth)
}

/// Predictions of `spec` at `time` for the evaluable samples among `test`.
/// LR models are trained on the evaluable samples among `train`.
pub fn predict_at(
    dataset: &Dataset,
    train: &[String],
    test: &[String],
    spec: &ModelSpec,
    time: EvalTime,
    with_trajectories: bool,
    cfg: &EvalConfig,
) -> Result<(Vec<SamplePrediction>, Vec<TrajEval>)> {
    let lookup = |id: &String| {
        dataset
            .get(id)
            .ok_or_else(|| Error::InvalidConfig(format!("split refers to unknown sample `{id}`")))
    };
    let mut samples = Vec::new();
    for id in test {
        let s = lookup(id)?;
        if not_evaluable(s, time, cfg.n_i).is_none() {
            samples.push(s);
        }
    }
    let mut preds = Vec::with_capacity(samples.len());
    let mut trajs = Vec::new();
    let tag = time_name(time);
    match spec {
        ModelSpec::Cm(params) => {
            let items: Vec<TrainingItem> = samples
                .iter()
                .map(|s| {
                    let mut it = TrainingItem::from_sample(s, eval_timestamp(s, time), cfg.n_i, cfg.lateral_tolerance)?;
                    it.key = format!("{}@{tag}", s.id);
                    Ok(it)
                })
                .collect::<Result<_>>()?;
            let batch: Vec<BatchItem<'_>> = items
                .iter()
                .map(|it| BatchItem {
                    key: &it.key,
                    init: it.init,
                    contested_length: it.contested_length,
                })
                .collect();
            let detail = if with_trajectories {
                Detail::Trajectories
            } else {
                Detail::Decision
            };
            let sets = simulate_batch_outcomes(&batch, params, &cfg.sim, cfg.n_p, cfg.seed, detail)?;
            for ((s, it), set) in samples.iter().zip(&items).zip(&sets) {
                let rec = aggregate(set)?;
                let mut sample_ade = None;
                if with_trajectories {
                    let (times, truth) = trajectory_window(s, it.t0, cfg.ade_horizon);
                    if !times.is_empty() {
                        let decoded = decode_predictions(set, &s.geometry, it.t0, &times)?;
                        let te = TrajEval {
                            times,
                            truth,
                            predictions: decoded
                                .into_iter()
                                .map(|tr| tr.into_iter().map(|p| (p.t, p.pos)).collect())
                                .collect(),
                        };
                        sample_ade = Some(ade(std::slice::from_ref(&te))?);
                        trajs.push(te);
                    }
                }
                preds.push(SamplePrediction {
                    id: s.id.clone(),
                    time,
                    t0: it.t0,
                    label: s.outcome.accepted,
                    a_pred: rec.a_pred,
                    ade: sample_ade,
                });
            }
        }
        ModelSpec::Lr(schema) => {
            let mut feats = Vec::new();
            let mut labels = Vec::new();
            for id in train {
                let s = lookup(id)?;
                if not_evaluable(s, time, cfg.n_i).is_some() {
                    continue;
                }
                feats.push(featurize(s, *schema, eval_timestamp(s, time), cfg.n_i, cfg.lateral_tolerance, cfg.gap_cap)?);
                labels.push(s.outcome.accepted);
            }
            let model = lr_fit(&feats, &labels, cfg.lambda)?.model;
            for s in &samples {
                let t = eval_timestamp(s, time);
                let f: FeatureVector = featurize(s, *schema, t, cfg.n_i, cfg.lateral_tolerance, cfg.gap_cap)?;
                preds.push(SamplePrediction {
                    id: s.id.clone(),
                    time,
                    t0: s.window(t, cfg.n_i)?.t0,
                    label: s.outcome.accepted,
                    a_pred: lr_predict(&model, &f)?,
                    ade: None,
                });
            }
        }
        ModelSpec::Cv => {
            for s in &samples {
                let (t0, ego, target) =
                    s.initial_conditions_at(eval_timestamp(s, time), cfg.n_i, cfg.lateral_tolerance)?;
                let arrival = |d: f64, v: f64| {
                    if d <= 0.0 {
                        0.0
                    } else if v > 0.0 {
                        d / v
                    } else {
                        f64::INFINITY
                    }
                };
                let first = arrival(target.d, target.v) < arrival(ego.d, ego.v);
                let mut sample_ade = None;
                if with_trajectories {
                    let (times, truth) = trajectory_window(s, t0, cfg.ade_horizon);
                    if !times.is_empty() {
                        let pred = cv_predict(&s.geometry, target, t0, &times);
                        let te = TrajEval {
                            times,
                            truth,
                            predictions: vec![pred.into_iter().map(|p| (p.t, p.pos)).collect()],
                        };
                        sample_ade = Some(ade(std::slice::from_ref(&te))?);
                        trajs.push(te);
                    }
                }
                preds.push(SamplePrediction {
                    id: s.id.clone(),
                    time,
                    t0,
                    label: s.outcome.accepted,
                    a_pred: if first { 1.0 } else { 0.0 },
                    ade: sample_ade,
                });
            }
        }
    }
    Ok((preds, trajs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricResult {
    pub value: Option<f64>,
    /// Reason the metric is missing.
    pub skipped: Option<String>,
    pub n_samples: usize,
}

impl MetricResult {
    fn ok(value: f64, n: usize) -> Self {
        Self {
            value: Some(value),
            skipped: None,
            n_samples: n,
        }
    }

    fn skip(reason: impl Into<String>, n: usize) -> Self {
        Self {
            value: None,
            skipped: Some(reason.into()),
            n_samples: n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub index: usize,
    pub kind: SplitKind,
    pub metrics: BTreeMap<Metric, MetricResult>,
    /// ROC points `(fpr, tpr)` behind each AUC value.
    pub roc: BTreeMap<Metric, Vec<(f64, f64)>>,
    pub predictions: Vec<SamplePrediction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelId,
    /// Configuration label, e.g. `CM_NA12`.
    pub label: String,
    pub dataset: String,
    pub splits: Vec<SplitReport>,
    /// Mean over the random splits that produced a value.
    pub random_mean: BTreeMap<Metric, Option<f64>>,
    pub critical: BTreeMap<Metric, Option<f64>>,
}

fn binary_metric(metric: Metric, preds: &[SamplePrediction]) -> (MetricResult, Option<Vec<(f64, f64)>>) {
    let n = preds.len();
    let eval = match BinaryEval::new(
        metric.time(),
        preds.iter().map(|p| p.label).collect(),
        preds.iter().map(|p| p.a_pred).collect(),
    ) {
        Ok(e) => e,
        Err(e) => return (MetricResult::skip(e.to_string(), n), None),
    };
    let n_pos = eval.labels.iter().filter(|&&l| l).count();
    if n_pos == 0 {
        let reason = match metric {
            Metric::TnrPrCritical => "no accepted gaps remain undecided at the critical timestamp",
            _ => "no accepted gaps among evaluable samples",
        };
        return (MetricResult::skip(reason, n), None);
    }
    if n_pos == n {
        return (MetricResult::skip("no rejected gaps among evaluable samples", n), None);
    }
    match metric {
        Metric::TnrPrCritical => match tnr_pr(&eval) {
            Ok(v) => (MetricResult::ok(v, n), None),
            Err(e) => (MetricResult::skip(e.to_string(), n), None),
        },
        _ => match (auc(&eval), roc_points(&eval)) {
            (Ok(v), Ok(r)) => (MetricResult::ok(v, n), Some(r)),
            (Err(e), _) | (_, Err(e)) => (MetricResult::skip(e.to_string(), n), None),
        },
    }
}

/// All four metrics of `spec` on one split.
pub fn evaluate_split(dataset: &Dataset, split: &Split, spec: &ModelSpec, cfg: &EvalConfig) -> Result<SplitReport> {
    let mut metrics = BTreeMap::new();
    let mut roc = BTreeMap::new();
    let mut predictions = Vec::new();
    let lr = matches!(spec, ModelSpec::Lr(_));
    for time in [EvalTime::GapOpening, EvalTime::CharacteristicGap, EvalTime::CriticalDecision] {
        let with_traj = time == EvalTime::CharacteristicGap && !lr;
        let (preds, trajs) = match predict_at(dataset, &split.train, &split.test, spec, time, with_traj, cfg) {
            Ok(x) => x,
            Err(e @ (Error::NotEnoughSamples(_) | Error::NotConverged { .. })) => {
                for m in Metric::ALL.into_iter().filter(|m| m.time() == time) {
                    metrics.insert(m, MetricResult::skip(format!("model could not be trained: {e}"), 0));
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        for m in Metric::ALL.into_iter().filter(|m| m.time() == time) {
            let result = if m == Metric::AdeCharacteristic {
                if lr {
                    MetricResult::skip("binary-only model produces no trajectories", preds.len())
                } else if trajs.is_empty() {
                    MetricResult::skip("no trajectory window available", 0)
                } else {
                    MetricResult::ok(ade(&trajs)?, trajs.len())
                }
            } else {
                let (r, points) = binary_metric(m, &preds);
                if let Some(p) = points {
                    roc.insert(m, p);
                }
                r
            };
            metrics.insert(m, result);
        }
        predictions.extend(preds);
    }
    Ok(SplitReport {
        index: split.index,
        kind: split.kind,
        metrics,
        roc,
        predictions,
    })
}

fn summarize(splits: &[SplitReport]) -> (BTreeMap<Metric, Option<f64>>, BTreeMap<Metric, Option<f64>>) {
    let mut random_mean = BTreeMap::new();
    let mut critical = BTreeMap::new();
    for m in Metric::ALL {
        let vals: Vec<f64> = splits
            .iter()
            .filter(|s| s.kind == SplitKind::Random)
            .filter_map(|s| s.metrics.get(&m).and_then(|r| r.value))
            .collect();
        random_mean.insert(m, (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64));
        critical.insert(
            m,
            splits
                .iter()
                .find(|s| s.kind == SplitKind::Critical)
                .and_then(|s| s.metrics.get(&m).and_then(|r| r.value)),
        );
    }
    (random_mean, critical)
}

/// Evaluates one model on every split. `params` supplies the fitted CM
/// parameters per split and is ignored for the baselines.
pub fn evaluate(
    dataset: &Dataset,
    plan: &SplitPlan,
    model: ModelId,
    params: Option<&[ModelParams]>,
    label: &str,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    cfg.validate()?;
    if model == ModelId::CM && params.is_none_or(|p| p.len() != plan.splits.len()) {
        return Err(Error::InvalidConfig(format!(
            "CM evaluation needs one parameter set per split ({})",
            plan.splits.len()
        )));
    }
    let mut splits = Vec::with_capacity(plan.splits.len());
    for (i, split) in plan.splits.iter().enumerate() {
        let spec = match model {
            ModelId::CM => ModelSpec::Cm(params.expect("checked above")[i]),
            ModelId::LR1D => ModelSpec::Lr(Schema::OneD),
            ModelId::LR2D => ModelSpec::Lr(Schema::TwoD),
            ModelId::CV => ModelSpec::Cv,
        };
        splits.push(evaluate_split(dataset, split, &spec, cfg)?);
    }
    let (random_mean, critical) = summarize(&splits);
    Ok(EvalReport {
        model,
        label: label.to_string(),
        dataset: dataset.metadata.name.clone(),
        splits,
        random_mean,
        critical,
    })
}

/// Training items of `split` at gap opening.
pub fn training_items(dataset: &Dataset, split: &Split, n_i: usize, lateral_tolerance: f64) -> Result<Vec<TrainingItem>> {
    split
        .train
        .iter()
        .map(|id| {
            let s = dataset
                .get(id)
                .ok_or_else(|| Error::InvalidConfig(format!("split refers to unknown sample `{id}`")))?;
            TrainingItem::from_sample(s, s.times.gap_open, n_i, lateral_tolerance)
        })
        .collect()
}

/// Fits the model on the training part of every split.
pub fn fit_splits(
    dataset: &Dataset,
    plan: &SplitPlan,
    cfg: &FitConfig,
    n_i: usize,
    lateral_tolerance: f64,
) -> Result<Vec<FitResult>> {
    plan.splits
        .iter()
        .map(|split| {
            let items = training_items(dataset, split, n_i, lateral_tolerance)?;
            log::info!("fitting split {} ({} training samples)", split.index, items.len());
            fit(&items, cfg)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    A,
    B,
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub metric: Metric,
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
    pub t_test: Option<TTest>,
    pub random_winner: Option<Winner>,
    pub critical_a: Option<f64>,
    pub critical_b: Option<f64>,
    pub critical_winner: Option<Winner>,
}

/// Share of cases won, on the random splits and on the critical split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub random_wins: usize,
    pub random_cases: usize,
    pub critical_wins: usize,
    pub critical_cases: usize,
}

impl Cell {
    fn pct(wins: usize, cases: usize) -> f64 {
        if cases == 0 {
            0.0
        } else {
            100.0 * wins as f64 / cases as f64
        }
    }

    pub fn random_pct(&self) -> f64 {
        Self::pct(self.random_wins, self.random_cases)
    }

    pub fn critical_pct(&self) -> f64 {
        Self::pct(self.critical_wins, self.critical_cases)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.0}% ({:.0}%)", self.random_pct(), self.critical_pct())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub label_a: String,
    pub label_b: String,
    pub alpha: f64,
    pub rows: Vec<ComparisonRow>,
    pub a_better: Cell,
    pub b_better: Cell,
    pub a_better_by_metric: BTreeMap<Metric, Cell>,
    pub b_better_by_metric: BTreeMap<Metric, Cell>,
}

fn split_values(r: &EvalReport, m: Metric) -> Vec<(usize, Option<f64>)> {
    r.splits
        .iter()
        .filter(|s| s.kind == SplitKind::Random)
        .map(|s| (s.index, s.metrics.get(&m).and_then(|v| v.value)))
        .collect()
}

/// Paired comparison of two sets of reports, matched by dataset name. The
/// random splits are compared with a paired t-test; the single critical
/// split by its value.
pub fn compare(a: &[EvalReport], b: &[EvalReport], alpha: f64) -> Result<Comparison> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig("alpha must lie in (0, 1)".into()));
    }
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::LengthMismatch(format!("{} vs {} reports", a.len(), b.len())));
    }
    let mut rows = Vec::new();
    for ra in a {
        let rb = b
            .iter()
            .find(|r| r.dataset == ra.dataset)
            .ok_or_else(|| Error::InvalidConfig(format!("no report for dataset `{}` on side B", ra.dataset)))?;
        let layout = |r: &EvalReport| r.splits.iter().map(|s| (s.index, s.kind)).collect::<Vec<_>>();
        if layout(ra) != layout(rb) {
            return Err(Error::InvalidConfig(format!("reports on `{}` use different splits", ra.dataset)));
        }
        for m in Metric::ALL {
            let (va, vb) = (split_values(ra, m), split_values(rb, m));
            let (xs, ys): (Vec<f64>, Vec<f64>) = va
                .iter()
                .zip(&vb)
                .filter_map(|((_, x), (_, y))| Some(((*x)?, (*y)?)))
                .unzip();
            let t_test = if xs.len() >= 2 {
                Some(paired_t_test(&xs, &ys, alpha)?)
            } else {
                None
            };
            let orient = |diff: f64| if m.higher_is_better() { diff } else { -diff };
            let random_winner = t_test.map(|t| {
                if !t.significant {
                    Winner::Neither
                } else if orient(t.mean_difference) > 0.0 {
                    Winner::A
                } else {
                    Winner::B
                }
            });
            let (ca, cb) = (ra.critical.get(&m).copied().flatten(), rb.critical.get(&m).copied().flatten());
            let critical_winner = match (ca, cb) {
                (Some(x), Some(y)) => Some(match orient(x - y) {
                    d if d > 0.0 => Winner::A,
                    d if d < 0.0 => Winner::B,
                    _ => Winner::Neither,
                }),
                _ => None,
            };
            rows.push(ComparisonRow {
                dataset: ra.dataset.clone(),
                metric: m,
                mean_a: ra.random_mean.get(&m).copied().flatten(),
                mean_b: rb.random_mean.get(&m).copied().flatten(),
                t_test,
                random_winner,
                critical_a: ca,
                critical_b: cb,
                critical_winner,
            });
        }
    }
    let tally = |side: Winner, metric: Option<Metric>| {
        let sel = rows.iter().filter(|r| metric.is_none_or(|m| r.metric == m));
        let mut c = Cell {
            random_wins: 0,
            random_cases: 0,
            critical_wins: 0,
            critical_cases: 0,
        };
        for r in sel {
            if let Some(w) = r.random_winner {
                c.random_cases += 1;
                c.random_wins += usize::from(w == side);
            }
            if let Some(w) = r.critical_winner {
                c.critical_cases += 1;
                c.critical_wins += usize::from(w == side);
            }
        }
        c
    };
    let by_metric = |side| Metric::ALL.into_iter().map(|m| (m, tally(side, Some(m)))).collect();
    Ok(Comparison {
        label_a: a[0].label.clone(),
        label_b: b[0].label.clone(),
        alpha,
        a_better: tally(Winner::A, None),
        b_better: tally(Winner::B, None),
        a_better_by_metric: by_metric(Winner::A),
        b_better_by_metric: by_metric(Winner::B),
        rows,
    })
}
