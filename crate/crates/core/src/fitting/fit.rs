//! Fitting the model parameters to a training split.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bayes_opt::bayes_opt;
use super::loss::{loss, LossKind};
use crate::error::{Error, Result};
use crate::model::{simulate_batch_outcomes, BatchItem, Bounds, Detail, ModelParams, SimConfig, N_PARAMS};
use crate::prediction::{aggregate, PredictionRecord};
use crate::scenario::{Outcome, ProjectedState, Sample};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FitSchedule {
    /// One optimization round (1O).
    Single,
    /// A second round on bounds shrunk around the first optimum (2O).
    TwoStage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub sim: SimConfig,
    pub loss: LossKind,
    pub schedule: FitSchedule,
    /// Latin-hypercube points per stage.
    pub n_init: usize,
    /// Acquisition steps per stage.
    pub n_acquisition: usize,
    /// Stage-2 half width as a fraction of the original range.
    pub shrink: f64,
    pub n_p: usize,
    pub seed: u64,
    pub bounds: Bounds,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            loss: LossKind::L2,
            schedule: FitSchedule::Single,
            n_init: 40,
            n_acquisition: 60,
            shrink: 0.25,
            n_p: 100,
            seed: 0,
            bounds: Bounds::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.bounds.validate()?;
        if self.n_init + self.n_acquisition < N_PARAMS + 1 {
            return Err(Error::InvalidConfig(format!(
                "per-stage budget must be at least {}",
                N_PARAMS + 1
            )));
        }
        if !(self.shrink > 0.0 && self.shrink <= 1.0) {
            return Err(Error::InvalidConfig("shrink factor must lie in (0, 1]".into()));
        }
        if self.n_p == 0 {
            return Err(Error::InvalidConfig("n_p must be at least 1".into()));
        }
        Ok(())
    }
}

/// One sample prepared for simulation: initial states at the prediction
/// time and ground truth shifted so that the prediction time is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingItem {
    pub key: String,
    pub t0: f64,
    pub init: (ProjectedState, ProjectedState),
    pub contested_length: f64,
    pub truth: Outcome,
}

impl TrainingItem {
    pub fn from_sample(sample: &Sample, t_eval: f64, n_i: usize, lateral_tolerance: f64) -> Result<Self> {
        let (t0, ego, target) = sample.initial_conditions_at(t_eval, n_i, lateral_tolerance)?;
        let o = sample.outcome;
        Ok(Self {
            key: sample.id.clone(),
            t0,
            init: (ego, target),
            contested_length: sample.geometry.contested.length(),
            truth: Outcome {
                accepted: o.accepted,
                t_accept: o.t_accept.map(|t| t - t0),
                t_contested: o.t_contested - t0,
            },
        })
    }
}

/// Outcome-level predictions for every item.
pub fn predict_items(
    items: &[TrainingItem],
    params: &ModelParams,
    sim: &SimConfig,
    n_p: usize,
    seed: u64,
) -> Result<Vec<PredictionRecord>> {
    let batch: Vec<BatchItem<'_>> = items
        .iter()
        .map(|it| BatchItem {
            key: &it.key,
            init: it.init,
            contested_length: it.contested_length,
        })
        .collect();
    simulate_batch_outcomes(&batch, params, sim, n_p, seed, Detail::Decision)?
        .iter()
        .map(aggregate)
        .collect()
}

/// Training loss of `params` on `items`.
pub fn evaluate_loss(items: &[TrainingItem], params: &ModelParams, cfg: &FitConfig) -> Result<f64> {
    let preds = predict_items(items, params, &cfg.sim, cfg.n_p, cfg.seed)?;
    let truth: Vec<Outcome> = items.iter().map(|it| it.truth).collect();
    loss(cfg.loss, &preds, &truth)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub stage: u8,
    pub params: [f64; N_PARAMS],
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: ModelParams,
    pub loss: f64,
    pub trace: Vec<TraceEntry>,
    /// Search box of each stage.
    pub stage_bounds: Vec<Bounds>,
}

impl FitResult {
    /// Best loss after each evaluation.
    pub fn incumbent_curve(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.trace
            .iter()
            .map(|e| {
                best = best.min(e.loss);
                best
            })
            .collect()
    }
}

/// Box of half width `shrink·(hi − lo)` around `center`, cut to `bounds`.
pub fn shrink_bounds(bounds: &Bounds, center: &[f64; N_PARAMS], shrink: f64) -> Bounds {
    let mut lo = bounds.lo;
    let mut hi = bounds.hi;
    for i in 0..N_PARAMS {
        let w = shrink * (bounds.hi[i] - bounds.lo[i]);
        lo[i] = (center[i] - w).max(bounds.lo[i]);
        hi[i] = (center[i] + w).min(bounds.hi[i]);
    }
    Bounds { lo, hi }
}

fn to_params(x: &[f64]) -> ModelParams {
    let mut a = [0.0; N_PARAMS];
    a.copy_from_slice(x);
    ModelParams::from_array(a)
}

/// Minimizes the configured loss over `items`. Every evaluation uses the
/// same simulation seed.
pub fn fit(items: &[TrainingItem], cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if items.is_empty() {
        return Err(Error::NotEnoughSamples("training split is empty".into()));
    }
    let objective = |x: &[f64]| {
        evaluate_loss(items, &to_params(x), cfg).unwrap_or_else(|e| {
            log::warn!("objective failed: {e}");
            f64::NAN
        })
    };
    let budget = cfg.n_init + cfg.n_acquisition;
    let stages = match cfg.schedule {
        FitSchedule::Single => 1,
        FitSchedule::TwoStage => 2,
    };
    let mut trace = Vec::with_capacity(budget * stages);
    let mut stage_bounds = vec![cfg.bounds];
    let mut best: Option<([f64; N_PARAMS], f64)> = None;
    for stage in 0..stages {
        let bounds = stage_bounds[stage];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0xB0_u64 << 8 | stage as u64));
        let r = bayes_opt(objective, &bounds.as_pairs(), budget, cfg.n_init, &mut rng)?;
        for e in &r.trace {
            let mut params = [0.0; N_PARAMS];
            params.copy_from_slice(&e.x);
            trace.push(TraceEntry {
                stage: stage as u8 + 1,
                params,
                loss: e.loss,
            });
            if best.is_none_or(|b| e.loss < b.1) {
                best = Some((params, e.loss));
            }
        }
        if stage + 1 < stages {
            let center = best.expect("stage produced evaluations").0;
            stage_bounds.push(shrink_bounds(&cfg.bounds, &center, cfg.shrink));
        }
        log::info!(
            "stage {} done: best loss {:.4}",
            stage + 1,
            best.map_or(f64::NAN, |b| b.1)
        );
    }
    let (x, l) = best.expect("at least one evaluation");
    Ok(FitResult {
        params: ModelParams::from_array(x),
        loss: l,
        trace,
        stage_bounds,
    })
}
