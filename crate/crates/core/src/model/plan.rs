//! Candidate future trajectories for one `(action, behavior)` pair.
//!
//! A plan holds the candidate action for a fixed duration and then follows a
//! behavior-consistent continuation built from constant-acceleration legs:
//!
//! * pass-first: head for the agent's free speed; if that would not clear the
//!   contested space before the other is predicted to arrive, use the constant
//!   acceleration that clears it exactly in time (infeasible above the
//!   acceleration limit);
//! * pass-second: keep speed if that already arrives after the other has
//!   left, otherwise brake so as to reach the entry no earlier than the
//!   other's predicted exit, stopping just short of it when needed, then
//!   resume (infeasible if the braking exceeds the deceleration limit or the
//!   agent is already at the entry).
//!
//! The other agent's arrival and exit are predicted at constant velocity from
//! the believed state.

use serde::{Deserialize, Serialize};

use super::kinematics::{advance, Drive, Kinematics, Segment, Trajectory};
use super::{Behavior, ControlScheme};
use crate::scenario::ProjectedState;

/// Gap left in front of the entry when a pass-second plan stops (m).
pub const STOP_BUFFER: f64 = 1e-3;

const MAX_LEGS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanContext {
    pub contested_length: f64,
    pub horizon: f64,
    pub action_duration: f64,
    pub scheme: ControlScheme,
    pub max_accel: f64,
    pub max_decel: f64,
    pub go_accel: f64,
    pub safety_margin: f64,
}

impl PlanContext {
    pub fn from_config(cfg: &super::SimConfig, contested_length: f64) -> Self {
        Self {
            contested_length,
            horizon: cfg.plan_horizon,
            action_duration: cfg.action_duration,
            scheme: cfg.scheme,
            max_accel: cfg.max_accel,
            max_decel: cfg.max_decel,
            go_accel: cfg.go_accel,
            safety_margin: cfg.safety_margin,
        }
    }

    pub fn drive(&self, u: f64) -> Drive {
        match self.scheme {
            ControlScheme::Acceleration => Drive::Accel(u),
            ControlScheme::Jerk => Drive::Jerk {
                jerk: u,
                limit: self.max_accel,
            },
        }
    }
}

/// A leg of the control program: `drive` held for `duration` seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leg {
    pub drive: Drive,
    pub duration: f64,
}

#[derive(Clone, Copy, Debug)]
struct Legs {
    legs: [Leg; MAX_LEGS],
    len: usize,
}

impl Legs {
    fn new() -> Self {
        Self {
            legs: [Leg {
                drive: Drive::Accel(0.0),
                duration: 0.0,
            }; MAX_LEGS],
            len: 0,
        }
    }

    fn push(&mut self, drive: Drive, duration: f64) {
        if duration > 0.0 && self.len < MAX_LEGS {
            self.legs[self.len] = Leg { drive, duration };
            self.len += 1;
        }
    }

    fn as_slice(&self) -> &[Leg] {
        &self.legs[..self.len]
    }
}

/// What the value function needs from a plan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub behavior: Behavior,
    /// Time the agent reaches the contested space (infinite if not within the horizon).
    pub entry: f64,
    /// Time the agent has fully left it (infinite if not within the horizon).
    pub exit: f64,
    /// `∫ a² dt` over the plan horizon.
    pub effort: f64,
    pub feasible: bool,
}

/// A generated trajectory with its control program.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub summary: PlanSummary,
    pub trajectory: Trajectory,
    pub legs: Vec<Leg>,
}

#[inline]
fn arrival_time(d: f64, v: f64) -> f64 {
    if d <= 0.0 {
        0.0
    } else if v > 0.0 {
        d / v
    } else {
        f64::INFINITY
    }
}

/// Time to cover `s` metres starting at speed `v` under the free-go profile.
#[inline]
fn free_go_time(s: f64, v: f64, free_speed: f64, go: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if v >= free_speed {
        return if v > 0.0 { s / v } else { f64::INFINITY };
    }
    let t_acc = (free_speed - v) / go;
    let s_acc = v * t_acc + 0.5 * go * t_acc * t_acc;
    if s <= s_acc {
        (-v + (v * v + 2.0 * go * s).sqrt()) / go
    } else {
        t_acc + (s - s_acc) / free_speed
    }
}

fn push_free_go(legs: &mut Legs, v: f64, free_speed: f64, go: f64, rest: f64) {
    if v < free_speed {
        let t_acc = (free_speed - v) / go;
        legs.push(Drive::Accel(go), t_acc.min(rest));
        legs.push(Drive::Accel(0.0), rest - t_acc);
    } else {
        legs.push(Drive::Accel(0.0), rest);
    }
}

/// Builds the control program; returns it with the feasibility flag.
fn build_legs(
    kin: Kinematics,
    free_speed: f64,
    u: f64,
    behavior: Behavior,
    other: ProjectedState,
    ctx: &PlanContext,
) -> (Legs, bool) {
    let mut legs = Legs::new();
    let t1 = ctx.action_duration.min(ctx.horizon);
    legs.push(ctx.drive(u), t1);
    // state at the end of the action phase
    let k1 = advance(kin, ctx.drive(u), 0.0, t1, &mut |_| {});
    let feasible = continuation(&mut legs, k1, t1, free_speed, behavior, other, ctx);
    (legs, feasible)
}

/// Appends the behavior-consistent legs that follow the action phase, which
/// ends at `t1` in state `k1`. Returns the feasibility flag.
fn continuation(
    legs: &mut Legs,
    k1: Kinematics,
    t1: f64,
    free_speed: f64,
    behavior: Behavior,
    other: ProjectedState,
    ctx: &PlanContext,
) -> bool {
    let rest = ctx.horizon - t1;
    if rest <= 0.0 {
        return true;
    }
    let (d1, v1) = (k1.d, k1.v);
    let len = ctx.contested_length;
    let ov = other.v.max(0.0);
    let go = ctx.go_accel;
    let mut feasible = true;
    match behavior {
        Behavior::PassFirst => {
            let s = d1 + len;
            let deadline = if other.d <= -len {
                f64::INFINITY
            } else {
                arrival_time(other.d, ov) - ctx.safety_margin - t1
            };
            if s <= 0.0
                || deadline.is_infinite()
                || free_go_time(s, v1, free_speed, go) <= deadline
            {
                push_free_go(legs, v1, free_speed, go, rest);
            } else if deadline <= 0.0 {
                feasible = false;
                push_free_go(legs, v1, free_speed, go, rest);
            } else {
                let a_req = 2.0 * (s - v1 * deadline) / (deadline * deadline);
                if a_req > ctx.max_accel {
                    feasible = false;
                    legs.push(Drive::Accel(ctx.max_accel), rest);
                } else {
                    legs.push(Drive::Accel(a_req), deadline.min(rest));
                    legs.push(Drive::Accel(0.0), rest - deadline);
                }
            }
        }
        Behavior::PassSecond => {
            let other_gone = other.d <= -len;
            let wait = if other_gone {
                0.0
            } else {
                arrival_time(other.d + len, ov) + ctx.safety_margin - t1
            };
            if wait <= 0.0 {
                push_free_go(legs, v1, free_speed, go, rest);
            } else if d1 <= STOP_BUFFER {
                feasible = false;
                push_free_go(legs, v1, free_speed, go, rest);
            } else if v1 > 0.0 && d1 / v1 >= wait {
                // arrives after the other has left anyway
                legs.push(Drive::Accel(0.0), wait.min(rest));
                push_free_go(legs, v1, free_speed, go, rest - wait);
            } else if v1 == 0.0 {
                legs.push(Drive::Accel(0.0), wait.min(rest));
                push_free_go(legs, 0.0, free_speed, go, rest - wait);
            } else {
                let room = d1 - STOP_BUFFER;
                let a_slow = if wait.is_finite() {
                    2.0 * (room - v1 * wait) / (wait * wait)
                } else {
                    f64::NEG_INFINITY
                };
                if wait.is_finite() && v1 + a_slow * wait >= 0.0 {
                    // roll up to the entry just as the other leaves
                    if -a_slow > ctx.max_decel {
                        feasible = false;
                    }
                    let v_end = v1 + a_slow * wait;
                    legs.push(Drive::Accel(a_slow), wait.min(rest));
                    push_free_go(legs, v_end, free_speed, go, rest - wait);
                } else {
                    let a_stop = -v1 * v1 / (2.0 * room);
                    if -a_stop > ctx.max_decel {
                        feasible = false;
                    }
                    let t_stop = 2.0 * room / v1;
                    legs.push(Drive::Accel(a_stop), t_stop.min(rest));
                    let held = (wait - t_stop).min(rest - t_stop);
                    legs.push(Drive::Accel(0.0), held);
                    push_free_go(legs, 0.0, free_speed, go, rest - t_stop - held);
                }
            }
        }
    }
    feasible
}

/// Running entry, exit and effort of a plan as its segments are produced.
#[derive(Clone, Copy)]
struct SummaryAcc {
    exit_level: f64,
    entry: f64,
    exit: f64,
    effort: f64,
}

impl SummaryAcc {
    fn new(contested_length: f64) -> Self {
        Self {
            exit_level: -contested_length,
            entry: f64::INFINITY,
            exit: f64::INFINITY,
            effort: 0.0,
        }
    }

    #[inline]
    fn observe(&mut self, seg: Segment) {
        self.effort += seg.effort(seg.duration);
        if self.exit.is_infinite() {
            if self.entry.is_infinite() {
                if let Some(tau) = seg.crossing(0.0) {
                    self.entry = seg.t0 + tau;
                }
            }
            if let Some(tau) = seg.crossing(self.exit_level) {
                self.exit = seg.t0 + tau;
            }
        }
    }

    fn finish(self, behavior: Behavior, feasible: bool) -> PlanSummary {
        PlanSummary {
            behavior,
            entry: self.entry,
            exit: self.exit,
            effort: self.effort,
            feasible,
        }
    }
}

/// Summaries of both behaviors for action `u`, indexed by
/// [`Behavior::index`]. Equal to two [`plan_summary`] calls, sharing the
/// action phase.
pub fn plan_pair(
    kin: Kinematics,
    free_speed: f64,
    u: f64,
    other: ProjectedState,
    ctx: &PlanContext,
) -> [PlanSummary; 2] {
    let t1 = ctx.action_duration.min(ctx.horizon);
    let mut head = SummaryAcc::new(ctx.contested_length);
    let k1 = if t1 > 0.0 {
        advance(kin, ctx.drive(u), 0.0, t1, &mut |seg| head.observe(seg))
    } else {
        advance(kin, ctx.drive(u), 0.0, t1, &mut |_| {})
    };
    let t_start = if t1 > 0.0 { t1 } else { 0.0 };
    Behavior::ALL.map(|b| {
        let mut acc = head;
        let mut legs = Legs::new();
        let feasible = continuation(&mut legs, k1, t1, free_speed, b, other, ctx);
        let mut k = if t1 > 0.0 { k1 } else { kin };
        let mut t = t_start;
        for leg in legs.as_slice() {
            k = advance(k, leg.drive, t, leg.duration, &mut |seg| acc.observe(seg));
            t += leg.duration;
        }
        acc.finish(b, feasible)
    })
}

/// Integrates the legs from `kin`, handing each segment to `emit`.
fn run_legs(kin: Kinematics, legs: &Legs, emit: &mut impl FnMut(Segment)) {
    let mut k = kin;
    let mut t = 0.0;
    for leg in legs.as_slice() {
        k = advance(k, leg.drive, t, leg.duration, emit);
        t += leg.duration;
    }
}

/// Plan summary without materialising segments.
pub fn plan_summary(
    kin: Kinematics,
    free_speed: f64,
    u: f64,
    behavior: Behavior,
    other: ProjectedState,
    ctx: &PlanContext,
) -> PlanSummary {
    let (legs, feasible) = build_legs(kin, free_speed, u, behavior, other, ctx);
    let mut acc = SummaryAcc::new(ctx.contested_length);
    run_legs(kin, &legs, &mut |seg| acc.observe(seg));
    acc.finish(behavior, feasible)
}

/// Generates the plan for action `u` and behavior `behavior`, given the
/// believed state of the other agent.
pub fn generate_trajectory(
    kin: Kinematics,
    free_speed: f64,
    u: f64,
    behavior: Behavior,
    other: ProjectedState,
    ctx: &PlanContext,
) -> Plan {
    let (legs, _) = build_legs(kin, free_speed, u, behavior, other, ctx);
    let mut trajectory = Trajectory::default();
    run_legs(kin, &legs, &mut |seg| trajectory.push(seg));
    Plan {
        summary: plan_summary(kin, free_speed, u, behavior, other, ctx),
        trajectory,
        legs: legs.as_slice().to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(scheme: ControlScheme) -> PlanContext {
        PlanContext {
            contested_length: 4.0,
            horizon: 10.0,
            action_duration: 0.5,
            scheme,
            max_accel: 4.0,
            max_decel: 8.0,
            go_accel: 2.0,
            safety_margin: 0.0,
        }
    }

    fn far_other() -> ProjectedState {
        ProjectedState::new(1e6, 0.0)
    }

    #[test]
    fn cruising_plan_is_constant_velocity() {
        let k = Kinematics { d: 10.0, v: 2.0, a: 0.0 };
        // free speed equal to the current speed keeps it
        let p = generate_trajectory(k, 2.0, 0.0, Behavior::PassFirst, far_other(), &ctx(ControlScheme::Acceleration));
        for t in [0.0, 0.3, 2.0, 4.0, 9.5] {
            assert!((p.trajectory.d_at(t) - (10.0 - 2.0 * t)).abs() < 1e-12);
        }
        assert!(p.summary.feasible);
        assert!((p.summary.entry - 5.0).abs() < 1e-12);
        assert!((p.summary.exit - 7.0).abs() < 1e-12);
        assert_eq!(p.summary.effort, 0.0);
    }

    #[test]
    fn accelerating_from_rest() {
        let k = Kinematics { d: 10.0, v: 0.0, a: 0.0 };
        let mut c = ctx(ControlScheme::Acceleration);
        c.action_duration = 2.0;
        let p = generate_trajectory(k, 10.0, 1.0, Behavior::PassFirst, far_other(), &c);
        assert_eq!(p.trajectory.d_at(2.0), 8.0);
    }

    #[test]
    fn pass_second_stops_short_of_entry() {
        let k = Kinematics { d: 20.0, v: 10.0, a: 0.0 };
        // other sits in front of the contested space and never leaves
        let other = ProjectedState::new(5.0, 0.0);
        let p = generate_trajectory(k, 10.0, 0.0, Behavior::PassSecond, other, &ctx(ControlScheme::Acceleration));
        assert!(p.summary.feasible);
        assert!(p.summary.entry.is_infinite());
        let d_end = p.trajectory.d_at(9.9);
        assert!((d_end - STOP_BUFFER).abs() < 1e-9, "{d_end}");
    }

    #[test]
    fn pass_second_infeasible_when_too_close() {
        let k = Kinematics { d: 2.0, v: 15.0, a: 0.0 };
        let other = ProjectedState::new(5.0, 0.0);
        let p = plan_summary(k, 15.0, 0.0, Behavior::PassSecond, other, &ctx(ControlScheme::Acceleration));
        assert!(!p.feasible);
    }

    #[test]
    fn pass_first_clears_before_other_arrives() {
        let k = Kinematics { d: 20.0, v: 5.0, a: 0.0 };
        let other = ProjectedState::new(40.0, 10.0);
        let p = plan_summary(k, 5.0, 0.0, Behavior::PassFirst, other, &ctx(ControlScheme::Acceleration));
        assert!(p.feasible);
        assert!(p.exit <= 4.0 + 1e-9, "{}", p.exit);
    }

    #[test]
    fn pass_first_infeasible_when_other_imminent() {
        let k = Kinematics { d: 30.0, v: 2.0, a: 0.0 };
        let other = ProjectedState::new(5.0, 10.0);
        let p = plan_summary(k, 8.0, 0.0, Behavior::PassFirst, other, &ctx(ControlScheme::Acceleration));
        assert!(!p.feasible);
    }

    #[test]
    fn pair_equals_separate_summaries() {
        let states = [
            Kinematics { d: 15.0, v: 6.0, a: 1.0 },
            Kinematics { d: 0.5, v: 0.0, a: 0.0 },
            Kinematics { d: -1.0, v: 3.0, a: -2.0 },
        ];
        let others = [ProjectedState::new(25.0, 8.0), ProjectedState::new(3.0, 0.0), ProjectedState::new(-5.0, 9.0)];
        for scheme in [ControlScheme::Acceleration, ControlScheme::Jerk] {
            for k in states {
                for o in others {
                    for u in [-4.0, -1.0, 0.0, 2.0, 10.0] {
                        let c = ctx(scheme);
                        let pair = plan_pair(k, 9.0, u, o, &c);
                        for b in Behavior::ALL {
                            assert_eq!(pair[b.index()], plan_summary(k, 9.0, u, b, o, &c));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn summary_matches_materialised_plan() {
        let k = Kinematics { d: 15.0, v: 6.0, a: 1.0 };
        let other = ProjectedState::new(25.0, 8.0);
        for b in Behavior::ALL {
            for u in [-10.0, 0.0, 10.0] {
                let p = generate_trajectory(k, 9.0, u, b, other, &ctx(ControlScheme::Jerk));
                let entry = p.trajectory.crossing(0.0).unwrap_or(f64::INFINITY);
                assert_eq!(entry, p.summary.entry);
                let end = p.trajectory.end();
                assert!((end - 10.0).abs() < 1e-9);
            }
        }
    }
}
