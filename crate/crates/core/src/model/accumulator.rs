//! Leaky evidence accumulation with threshold switching.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::kinematics::Kinematics;
use super::perception::BeliefState;
use super::ModelParams;

/// Per-agent decision state during a rollout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentSimState {
    pub kin: Kinematics,
    /// Index of the applied action in the action set.
    pub current: usize,
    /// One accumulator per action.
    pub accumulators: Vec<f64>,
    pub belief: BeliefState,
}

impl AgentSimState {
    pub fn new(kin: Kinematics, n_actions: usize, current: usize, belief: BeliefState) -> Self {
        Self {
            kin,
            current,
            accumulators: vec![0.0; n_actions],
            belief,
        }
    }
}

/// Folds this step's weighted values into the accumulators and returns the
/// index of the action to apply. Accumulators follow
/// `A ← λ·A + (1 − λ)·V + σ_a·√Δt·ε`; the applied action only changes when
/// the best accumulator beats the current one by more than the threshold.
pub fn accumulate_and_select<R: Rng + ?Sized>(
    accumulators: &mut [f64],
    current: usize,
    weighted_values: &[f64],
    params: &ModelParams,
    dt: f64,
    rng: &mut R,
) -> usize {
    debug_assert_eq!(accumulators.len(), weighted_values.len());
    let lambda = params.leak;
    let noise = params.sigma_acc * dt.sqrt();
    for (acc, &v) in accumulators.iter_mut().zip(weighted_values) {
        let eps: f64 = if noise > 0.0 {
            rng.sample(StandardNormal)
        } else {
            0.0
        };
        *acc = lambda * *acc + (1.0 - lambda) * v + noise * eps;
    }
    let mut best = current;
    for (i, &a) in accumulators.iter().enumerate() {
        if a > accumulators[best] {
            best = i;
        }
    }
    if accumulators[best] - accumulators[current] > params.switch_threshold {
        best
    } else {
        current
    }
}
