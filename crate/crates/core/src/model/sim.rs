//! Stochastic rollouts of one interaction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kinematics::{advance, Drive, Kinematics, Segment, Trajectory};
use super::perception::{filter_step, BeliefState};
use super::plan::{plan_pair, PlanContext, PlanSummary};
use super::value::{evaluate_value, softmax2, ValueContext};
use super::{accumulate_and_select, Behavior, InteractionMode, ModelParams, SimConfig};
use crate::error::{Error, Result};
use crate::scenario::ProjectedState;

/// Recorded 1D motion of both agents, times relative to the rollout start.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPair {
    pub ego: Trajectory,
    pub target: Trajectory,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub ego_entry: Option<f64>,
    pub ego_exit: Option<f64>,
    pub target_entry: Option<f64>,
    pub target_exit: Option<f64>,
    /// The target reached the contested space strictly before the ego.
    pub accepted: bool,
    /// At least one agent reached the contested space within the horizon.
    pub resolved: bool,
    /// Both agents were inside the contested space at the same time.
    pub collision: bool,
    /// At every decision step the target had a feasible pass-second plan.
    pub yield_always_feasible: bool,
    /// Number of applied-action changes (ego, target).
    pub switches: [u32; 2],
    /// Time at which the rollout stopped.
    pub ended_at: f64,
}

impl PairOutcome {
    /// Target's entry time, or `horizon` when it never entered.
    pub fn acceptance_time(&self, horizon: f64) -> f64 {
        self.target_entry.unwrap_or(horizon)
    }
}

/// `n_p` rollouts for one sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RolloutSet {
    pub horizon: f64,
    pub outcomes: Vec<PairOutcome>,
    /// Recorded trajectories; empty unless recording was requested.
    pub pairs: Vec<SimulatedPair>,
}

impl RolloutSet {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Independent stream for rollout `index` of the sample keyed `key`.
pub fn rollout_rng(seed: u64, key: &str, index: u64) -> ChaCha8Rng {
    let s = splitmix64(splitmix64(splitmix64(seed) ^ fnv1a64(key.as_bytes())) ^ index);
    ChaCha8Rng::seed_from_u64(s)
}

fn validate_params(p: &ModelParams) -> Result<()> {
    let x = p.to_array();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParams("non-finite parameter".into()));
    }
    if !(0.0..=1.0).contains(&p.leak) {
        return Err(Error::InvalidParams(format!("leak {} outside [0, 1]", p.leak)));
    }
    if p.beta <= 0.0 || p.sigma_obs < 0.0 || p.sigma_acc < 0.0 || p.switch_threshold < 0.0 {
        return Err(Error::InvalidParams(
            "beta must be positive and noise terms non-negative".into(),
        ));
    }
    Ok(())
}

struct Decider {
    current: usize,
    accumulators: Vec<f64>,
    belief: BeliefState,
    free_speed: f64,
    value_ctx: ValueContext,
    /// How this agent assumes the other values outcomes.
    other_ctx: ValueContext,
    switches: u32,
}

/// Scratch buffers reused across steps.
struct Scratch {
    own: Vec<[PlanSummary; 2]>,
    other: Vec<[PlanSummary; 2]>,
    values: Vec<f64>,
}

struct Shared<'a> {
    actions: &'a [f64],
    zero: usize,
    params: &'a ModelParams,
    cfg: &'a SimConfig,
    plan: PlanContext,
}

impl Decider {
    /// One perceive/plan/value/accumulate cycle. Returns whether some action
    /// kept a feasible pass-second plan.
    fn decide(
        &mut self,
        my: Kinematics,
        other_true: ProjectedState,
        sh: &Shared<'_>,
        scratch: &mut Scratch,
        rng: &mut ChaCha8Rng,
    ) -> bool {
        let sigma = sh.params.sigma_obs;
        let noise: f64 = if sigma > 0.0 {
            sigma * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        self.belief = filter_step(
            &self.belief,
            other_true.d + noise,
            sigma,
            sh.cfg.process_noise,
            sh.cfg.dt,
        );
        let seen = ProjectedState::new(self.belief.mean.d, self.belief.mean.v.max(0.0));
        let other_kin = Kinematics {
            d: seen.d,
            v: seen.v,
            a: 0.0,
        };
        let other_free = seen.v.max(sh.cfg.free_speed_floor);
        let me_seen = ProjectedState::new(my.d, my.v);
        let mut yield_feasible = false;
        for (i, &u) in sh.actions.iter().enumerate() {
            let own = plan_pair(my, self.free_speed, u, seen, &sh.plan);
            if own[Behavior::PassSecond.index()].feasible {
                yield_feasible = true;
            }
            scratch.own[i] = own;
            scratch.other[i] = plan_pair(other_kin, other_free, u, me_seen, &sh.plan);
        }
        // the other's behavior probabilities, valued against our current action
        let p = sh.params;
        let mut best_other = [f64::NEG_INFINITY; 2];
        for b in Behavior::ALL {
            let mine = &scratch.own[self.current][b.opposite().index()];
            for row in &scratch.other {
                let v = evaluate_value(&row[b.index()], mine, p, &self.other_ctx);
                best_other[b.index()] = best_other[b.index()].max(v);
            }
        }
        let weights = softmax2(best_other[0], best_other[1], p.beta);
        for (i, row) in scratch.own.iter().enumerate() {
            let mut v = 0.0;
            for bo in Behavior::ALL {
                let theirs = &scratch.other[sh.zero][bo.index()];
                let best = row
                    .iter()
                    .map(|own| evaluate_value(own, theirs, p, &self.value_ctx))
                    .fold(f64::NEG_INFINITY, f64::max);
                v += weights[bo.index()] * best;
            }
            scratch.values[i] = v;
        }
        let next = accumulate_and_select(
            &mut self.accumulators,
            self.current,
            &scratch.values,
            p,
            sh.cfg.dt,
            rng,
        );
        if next != self.current {
            self.switches += 1;
            self.current = next;
        }
        yield_feasible
    }
}

/// Tracks entry and exit crossings of one agent as segments are produced.
struct Crossings {
    exit_level: f64,
    entry: Option<f64>,
    exit: Option<f64>,
    record: Option<Trajectory>,
}

impl Crossings {
    fn new(exit_level: f64, record: bool) -> Self {
        Self {
            exit_level,
            entry: None,
            exit: None,
            record: record.then(Trajectory::default),
        }
    }

    fn observe(&mut self, seg: Segment) {
        if self.exit.is_none() {
            if self.entry.is_none() {
                self.entry = seg.crossing(0.0).map(|tau| seg.t0 + tau);
            }
            self.exit = seg.crossing(self.exit_level).map(|tau| seg.t0 + tau);
        }
        if let Some(tr) = &mut self.record {
            tr.push(seg);
        }
    }
}

/// Simulates one rollout from the projected initial states.
pub fn simulate_pair(
    init: (ProjectedState, ProjectedState),
    params: &ModelParams,
    cfg: &SimConfig,
    contested_length: f64,
    rng: &mut ChaCha8Rng,
    detail: Detail,
) -> Result<(PairOutcome, Option<SimulatedPair>)> {
    let record = detail == Detail::Trajectories;
    validate_params(params)?;
    cfg.validate()?;
    let (ego0, target0) = init;
    for s in [ego0, target0] {
        if !(s.d.is_finite() && s.v.is_finite()) {
            return Err(Error::NonFinite("initial state"));
        }
    }
    let action_set = cfg.action_set();
    let actions = action_set.values();
    let zero = action_set.zero_index();
    let sh = Shared {
        actions,
        zero,
        params,
        cfg,
        plan: PlanContext::from_config(cfg, contested_length),
    };
    let n = actions.len();
    let mut scratch = Scratch {
        own: vec![[dummy_summary(); 2]; n],
        other: vec![[dummy_summary(); 2]; n],
        values: vec![0.0; n],
    };
    let priority = |lacks: bool| ValueContext {
        horizon: cfg.plan_horizon,
        collision_penalty: cfg.collision_penalty,
        lacks_priority: lacks,
    };
    let new_decider = |own: ProjectedState, other: ProjectedState, lacks: bool| Decider {
        current: zero,
        accumulators: vec![0.0; n],
        belief: BeliefState::initial(other, params.sigma_obs),
        free_speed: own.v.max(0.0).max(cfg.free_speed_floor),
        value_ctx: priority(lacks),
        other_ctx: priority(!lacks),
        switches: 0,
    };
    let mut ego = Kinematics {
        d: ego0.d,
        v: ego0.v.max(0.0),
        a: 0.0,
    };
    let mut target = Kinematics {
        d: target0.d,
        v: target0.v.max(0.0),
        a: 0.0,
    };
    let mut ego_decider = match cfg.mode {
        InteractionMode::Interactive => Some(new_decider(ego0, target0, false)),
        InteractionMode::NonInteractive => None,
    };
    let mut target_decider = new_decider(target0, ego0, true);
    let exit_level = -contested_length;
    let mut ego_x = Crossings::new(exit_level, record);
    let mut target_x = Crossings::new(exit_level, record);
    let mut yield_always_feasible = true;

    let n_steps = (cfg.horizon / cfg.dt - 1e-9).ceil() as usize;
    let mut ended_at = cfg.horizon;
    for k in 0..n_steps {
        let t = k as f64 * cfg.dt;
        let step = (cfg.horizon - t).min(cfg.dt);
        let ego_state = ProjectedState::new(ego.d, ego.v);
        let target_state = ProjectedState::new(target.d, target.v);
        if let Some(dec) = &mut ego_decider {
            dec.decide(ego, target_state, &sh, &mut scratch, rng);
        }
        yield_always_feasible &= target_decider.decide(target, ego_state, &sh, &mut scratch, rng);

        let ego_drive = match &ego_decider {
            Some(dec) => stop_line(ego, sh.plan.drive(actions[dec.current]), target, step, &sh.plan),
            None => Drive::Accel(0.0),
        };
        let target_drive = stop_line(target, sh.plan.drive(actions[target_decider.current]), ego, step, &sh.plan);
        ego = advance(ego, ego_drive, t, step, &mut |s| ego_x.observe(s));
        target = advance(target, target_drive, t, step, &mut |s| target_x.observe(s));
        let done = match detail {
            Detail::Decision => target_x.entry.is_some(),
            _ => ego_x.exit.is_some() && target_x.exit.is_some(),
        };
        if done {
            ended_at = t + step;
            break;
        }
    }

    let ego_entry = ego_x.entry;
    let target_entry = target_x.entry;
    let accepted = match (target_entry, ego_entry) {
        (Some(tt), Some(te)) => tt < te,
        (Some(_), None) => true,
        _ => false,
    };
    let occupancy = |x: &Crossings| x.entry.map(|e| (e, x.exit.unwrap_or(f64::INFINITY)));
    let collision = match (occupancy(&ego_x), occupancy(&target_x)) {
        (Some((ei, eo)), Some((ti, to))) => ei.max(ti) < eo.min(to),
        _ => false,
    };
    let outcome = PairOutcome {
        ego_entry,
        ego_exit: ego_x.exit,
        target_entry,
        target_exit: target_x.exit,
        accepted,
        resolved: ego_entry.is_some() || target_entry.is_some(),
        collision,
        yield_always_feasible,
        switches: [
            ego_decider.as_ref().map_or(0, |d| d.switches),
            target_decider.switches,
        ],
        ended_at,
    };
    let pair = match (ego_x.record, target_x.record) {
        (Some(ego), Some(target)) => Some(SimulatedPair { ego, target }),
        _ => None,
    };
    Ok((outcome, pair))
}

/// Hard braking for an agent that would otherwise lose the ability to stop
/// before the entry while the other occupies the contested space or can no
/// longer stop short of it. This is seen directly, not through the noisy
/// position estimate.
fn stop_line(me: Kinematics, drive: Drive, other: Kinematics, step: f64, ctx: &PlanContext) -> Drive {
    let room = |k: Kinematics| k.d - k.v * k.v / (2.0 * ctx.max_decel);
    let occupied = other.d > -ctx.contested_length && room(other) <= 0.0;
    if !occupied || room(me) <= 0.0 {
        return drive;
    }
    let next = advance(me, drive, 0.0, step, &mut |_| {});
    if room(next) > 0.0 {
        drive
    } else {
        Drive::Accel(-ctx.max_decel)
    }
}

fn dummy_summary() -> PlanSummary {
    PlanSummary {
        behavior: Behavior::PassFirst,
        entry: f64::INFINITY,
        exit: f64::INFINITY,
        effort: 0.0,
        feasible: true,
    }
}

/// `n_p` rollouts of one sample. Rollout `p` draws from
/// [`rollout_rng`]`(seed, key, p)`, so the result does not depend on how
/// the rollouts are scheduled across threads.
#[allow(clippy::too_many_arguments)]
pub fn simulate_batch(
    key: &str,
    init: (ProjectedState, ProjectedState),
    params: &ModelParams,
    cfg: &SimConfig,
    contested_length: f64,
    n_p: usize,
    seed: u64,
    detail: Detail,
) -> Result<RolloutSet> {
    if n_p == 0 {
        return Err(Error::InvalidConfig("n_p must be at least 1".into()));
    }
    let results: Vec<Result<(PairOutcome, Option<SimulatedPair>)>> = (0..n_p)
        .into_par_iter()
        .map(|p| {
            let mut rng = rollout_rng(seed, key, p as u64);
            simulate_pair(init, params, cfg, contested_length, &mut rng, detail)
        })
        .collect();
    let mut set = RolloutSet {
        horizon: cfg.horizon,
        outcomes: Vec::with_capacity(n_p),
        pairs: Vec::new(),
    };
    for r in results {
        let (o, pair) = r?;
        set.outcomes.push(o);
        if let Some(pair) = pair {
            set.pairs.push(pair);
        }
    }
    Ok(set)
}

/// How much of each rollout to simulate and keep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Detail {
    /// Stop as soon as the target has entered the contested space; the
    /// acceptance decision and time are final at that point, exits and the
    /// collision flag only cover the simulated span.
    Decision,
    /// Run until both agents have left or the horizon is reached.
    #[default]
    Full,
    /// As `Full`, also recording both trajectories.
    Trajectories,
}

/// One unit of batched work.
#[derive(Clone, Debug)]
pub struct BatchItem<'a> {
    pub key: &'a str,
    pub init: (ProjectedState, ProjectedState),
    pub contested_length: f64,
}

/// Rollouts for many samples at once, parallel over samples and rollouts.
/// Results are in input order.
pub fn simulate_batch_outcomes(
    items: &[BatchItem<'_>],
    params: &ModelParams,
    cfg: &SimConfig,
    n_p: usize,
    seed: u64,
    detail: Detail,
) -> Result<Vec<RolloutSet>> {
    items
        .par_iter()
        .map(|it| simulate_batch(it.key, it.init, params, cfg, it.contested_length, n_p, seed, detail))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn non_interactive_ego_is_exactly_constant_velocity() {
        let cfg = SimConfig::default();
        let init = (ProjectedState::new(60.0, 10.0), ProjectedState::new(20.0, 5.0));
        let (_, pair) =
            simulate_pair(init, &ModelParams::default(), &cfg, 4.0, &mut rng(), Detail::Trajectories).unwrap();
        let ego = pair.unwrap().ego;
        for seg in &ego.segments {
            assert_eq!(seg.v0, 10.0);
            assert_eq!(seg.a0, 0.0);
            assert_eq!(seg.jerk, 0.0);
            let t = seg.t0;
            assert!((seg.d0 - (60.0 - 10.0 * t)).abs() < 1e-9);
        }
    }

    #[test]
    fn rng_streams_are_distinct_and_stable() {
        let mut a = rollout_rng(1, "s1", 0);
        let mut b = rollout_rng(1, "s1", 1);
        let mut c = rollout_rng(1, "s1", 0);
        let (x, y, z): (u64, u64, u64) = (a.random(), b.random(), c.random());
        assert_ne!(x, y);
        assert_eq!(x, z);
    }

    #[test]
    fn zero_rollouts_rejected() {
        let init = (ProjectedState::new(60.0, 10.0), ProjectedState::new(20.0, 5.0));
        assert!(simulate_batch("a", init, &ModelParams::default(), &SimConfig::default(), 4.0, 0, 1, Detail::Full).is_err());
    }

    #[test]
    fn single_rollout_batch() {
        let init = (ProjectedState::new(60.0, 10.0), ProjectedState::new(20.0, 5.0));
        let set = simulate_batch("a", init, &ModelParams::default(), &SimConfig::default(), 4.0, 1, 1, Detail::Full).unwrap();
        assert_eq!(set.len(), 1);
    }
}
