//! The interaction simulator.
//!
//! Each modeled agent runs, at every timestep: noisy perception of the other
//! agent through a constant-velocity Kalman filter, enumeration of short-term
//! actions and long-term behaviors, closed-form trajectory generation,
//! value evaluation with a theory-of-mind weighting over the other agent's
//! behaviors, and a leaky evidence accumulator that only switches the
//! applied action once an alternative is better by a threshold.

pub mod accumulator;
pub mod kinematics;
pub mod perception;
pub mod plan;
pub mod poly;
pub mod sim;
pub mod value;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use accumulator::{accumulate_and_select, AgentSimState};
pub use kinematics::{Drive, Kinematics, Segment, Trajectory};
pub use perception::{perceive, BeliefState};
pub use plan::{generate_trajectory, Plan, PlanContext};
pub use sim::{
    rollout_rng, simulate_batch, simulate_batch_outcomes, simulate_pair, BatchItem, Detail, PairOutcome,
    RolloutSet, SimulatedPair,
};
pub use value::{evaluate_value, theory_of_mind_weights};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ControlScheme {
    /// Constant acceleration per action (AC).
    Acceleration,
    /// Constant jerk per action (JC).
    Jerk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InteractionMode {
    /// Both agents run the full decision model (IM).
    Interactive,
    /// Only the target is modeled; the ego keeps its initial speed (NM).
    NonInteractive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Behavior {
    PassFirst,
    PassSecond,
}

impl Behavior {
    pub const ALL: [Behavior; 2] = [Behavior::PassFirst, Behavior::PassSecond];

    pub fn opposite(self) -> Self {
        match self {
            Behavior::PassFirst => Behavior::PassSecond,
            Behavior::PassSecond => Behavior::PassFirst,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Discrete set of control magnitudes (m/s² under AC, m/s³ under JC).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ActionSet(Vec<f64>);

impl ActionSet {
    pub fn new(mut actions: Vec<f64>) -> Result<Self> {
        if actions.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidConfig("action set has non-finite entries".into()));
        }
        actions.sort_by(f64::total_cmp);
        actions.dedup();
        if actions.len() < 3 {
            return Err(Error::InvalidConfig(
                "action set needs at least 3 distinct actions".into(),
            ));
        }
        if !actions.contains(&0.0) {
            return Err(Error::InvalidConfig("action set must contain 0".into()));
        }
        let n = actions.len();
        if (0..n).any(|i| actions[i] != -actions[n - 1 - i]) {
            return Err(Error::InvalidConfig(
                "action set must be symmetric about 0".into(),
            ));
        }
        Ok(Self(actions))
    }

    pub fn default_for(scheme: ControlScheme) -> Self {
        match scheme {
            ControlScheme::Acceleration => Self(vec![-4.0, -2.0, 0.0, 2.0, 4.0]),
            ControlScheme::Jerk => Self(vec![-10.0, -5.0, 0.0, 5.0, 10.0]),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn zero_index(&self) -> usize {
        self.0.iter().position(|&a| a == 0.0).expect("validated")
    }
}

impl TryFrom<Vec<f64>> for ActionSet {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ActionSet> for Vec<f64> {
    fn from(a: ActionSet) -> Self {
        a.0
    }
}

/// Number of fitted parameters.
pub const N_PARAMS: usize = 8;

pub const PARAM_NAMES: [&str; N_PARAMS] = [
    "sigma_obs",
    "leak",
    "sigma_acc",
    "switch_threshold",
    "w_time",
    "w_ctrl",
    "w_rule",
    "beta",
];

/// Per-dimension search box for [`ModelParams`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: [f64; N_PARAMS],
    pub hi: [f64; N_PARAMS],
}

impl Bounds {
    pub fn new(lo: [f64; N_PARAMS], hi: [f64; N_PARAMS]) -> Result<Self> {
        let b = Self { lo, hi };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..N_PARAMS {
            let (lo, hi) = (self.lo[i], self.hi[i]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParams(format!(
                    "bounds for {} must be finite with lo < hi, got [{lo}, {hi}]",
                    PARAM_NAMES[i]
                )));
            }
        }
        // leak must stay inside (0, 1), beta and the noise terms positive
        if self.lo[1] <= 0.0 || self.hi[1] >= 1.0 {
            return Err(Error::InvalidParams("leak bounds must lie in (0, 1)".into()));
        }
        if self.lo[7] <= 0.0 {
            return Err(Error::InvalidParams("beta bounds must be positive".into()));
        }
        if self.lo.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidParams("all parameters are non-negative".into()));
        }
        Ok(())
    }

    pub fn as_pairs(&self) -> Vec<(f64, f64)> {
        (0..N_PARAMS).map(|i| (self.lo[i], self.hi[i])).collect()
    }

    pub fn contains(&self, x: &[f64; N_PARAMS]) -> bool {
        (0..N_PARAMS).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            lo: [0.05, 0.05, 0.0, 0.0, 0.0, 0.0, 0.0, 0.05],
            hi: [3.0, 0.95, 3.0, 3.0, 3.0, 1.0, 10.0, 5.0],
        }
    }
}

/// Fitted model parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Observation noise on the other agent's position (m).
    pub sigma_obs: f64,
    /// Accumulator leak factor, in (0, 1).
    pub leak: f64,
    /// Accumulator noise intensity.
    pub sigma_acc: f64,
    /// Accumulated-value advantage needed to switch action.
    pub switch_threshold: f64,
    pub w_time: f64,
    pub w_ctrl: f64,
    pub w_rule: f64,
    /// Inverse temperature of the theory-of-mind softmax.
    pub beta: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            sigma_obs: 1.0,
            leak: 0.5,
            sigma_acc: 0.5,
            switch_threshold: 1.0,
            w_time: 1.0,
            w_ctrl: 0.2,
            w_rule: 2.0,
            beta: 1.0,
        }
    }
}

impl ModelParams {
    pub fn to_array(&self) -> [f64; N_PARAMS] {
        [
            self.sigma_obs,
            self.leak,
            self.sigma_acc,
            self.switch_threshold,
            self.w_time,
            self.w_ctrl,
            self.w_rule,
            self.beta,
        ]
    }

    pub fn from_array(x: [f64; N_PARAMS]) -> Self {
        Self {
            sigma_obs: x[0],
            leak: x[1],
            sigma_acc: x[2],
            switch_threshold: x[3],
            w_time: x[4],
            w_ctrl: x[5],
            w_rule: x[6],
            beta: x[7],
        }
    }

    pub fn validate(&self, bounds: &Bounds) -> Result<()> {
        let x = self.to_array();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        for i in 0..N_PARAMS {
            if x[i] < bounds.lo[i] || x[i] > bounds.hi[i] {
                return Err(Error::InvalidParams(format!(
                    "{} = {} outside [{}, {}]",
                    PARAM_NAMES[i], x[i], bounds.lo[i], bounds.hi[i]
                )));
            }
        }
        Ok(())
    }
}

/// Simulation settings that are not fitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub mode: InteractionMode,
    pub scheme: ControlScheme,
    /// Defaults to [`ActionSet::default_for`] the scheme.
    pub actions: Option<ActionSet>,
    /// Simulation step (s).
    pub dt: f64,
    /// Rollout horizon (s).
    pub horizon: f64,
    /// How long a candidate action is held in a plan (s).
    pub action_duration: f64,
    /// Span over which plans are generated and valued (s).
    pub plan_horizon: f64,
    /// Acceleration limit (m/s²); bounds the JC acceleration state and
    /// pass-first regulation.
    pub max_accel: f64,
    /// Strongest braking a pass-second plan may use (m/s²).
    pub max_decel: f64,
    /// Comfortable acceleration used when (re)gaining free speed (m/s²).
    pub go_accel: f64,
    /// Lower bound on an agent's desired speed (m/s).
    pub free_speed_floor: f64,
    /// White-acceleration noise of the perception filter (m/s²).
    pub process_noise: f64,
    pub collision_penalty: f64,
    /// Time margin a pass-first plan keeps before the other's arrival (s).
    pub safety_margin: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            mode: InteractionMode::NonInteractive,
            scheme: ControlScheme::Acceleration,
            actions: None,
            dt: 0.1,
            horizon: 15.0,
            action_duration: 0.5,
            plan_horizon: 10.0,
            max_accel: 4.0,
            max_decel: 8.0,
            go_accel: 2.0,
            free_speed_floor: 8.0,
            process_noise: 1.0,
            collision_penalty: 1e4,
            safety_margin: 0.0,
        }
    }
}

impl SimConfig {
    pub fn with(mode: InteractionMode, scheme: ControlScheme) -> Self {
        Self {
            mode,
            scheme,
            ..Self::default()
        }
    }

    pub fn action_set(&self) -> ActionSet {
        self.actions
            .clone()
            .unwrap_or_else(|| ActionSet::default_for(self.scheme))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("horizon", self.horizon),
            ("action_duration", self.action_duration),
            ("plan_horizon", self.plan_horizon),
            ("max_accel", self.max_accel),
            ("max_decel", self.max_decel),
            ("go_accel", self.go_accel),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("free_speed_floor", self.free_speed_floor),
            ("process_noise", self.process_noise),
            ("collision_penalty", self.collision_penalty),
            ("safety_margin", self.safety_margin),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        if let Some(a) = &self.actions {
            ActionSet::new(a.values().to_vec())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_set_rules() {
        assert!(ActionSet::new(vec![-1.0, 0.0, 1.0]).is_ok());
        assert!(ActionSet::new(vec![-1.0, 1.0, 2.0]).is_err());
        assert!(ActionSet::new(vec![-1.0, 0.0, 2.0]).is_err());
        assert!(ActionSet::new(vec![0.0, 0.0, 0.0]).is_err());
        let a = ActionSet::default_for(ControlScheme::Jerk);
        assert_eq!(a.values()[a.zero_index()], 0.0);
    }

    #[test]
    fn default_params_within_default_bounds() {
        ModelParams::default().validate(&Bounds::default()).unwrap();
        let x = ModelParams::default().to_array();
        assert_eq!(ModelParams::from_array(x), ModelParams::default());
    }
}
