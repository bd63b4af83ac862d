//! Fixed-step reference integrator for control programs.
//!
//! Steps of 1 ms apply the constant-jerk update of position, speed and
//! acceleration. A step in which the speed would turn negative, the
//! acceleration would leave its limits, or a standing agent would start
//! moving is halved recursively until it is shorter than `MIN_STEP`.

use cogap::model::plan::Leg;
use cogap::model::Drive;

pub const STEP: f64 = 1e-3;
const MIN_STEP: f64 = 1e-11;

#[derive(Clone, Copy, Debug)]
pub struct State {
    pub d: f64,
    pub v: f64,
    pub a: f64,
}

fn try_step(s: State, drive: Drive, h: f64) -> (State, bool) {
    match drive {
        Drive::Accel(acc) => {
            let v = s.v.max(0.0);
            if v == 0.0 && acc <= 0.0 {
                return (State { d: s.d, v: 0.0, a: acc }, false);
            }
            let v1 = v + acc * h;
            let next = State {
                d: s.d - v * h - 0.5 * acc * h * h,
                v: v1,
                a: acc,
            };
            (next, v1 < 0.0)
        }
        Drive::Jerk { jerk, limit } => {
            let pinned = (s.a >= limit && jerk > 0.0) || (s.a <= -limit && jerk < 0.0);
            let j = if pinned { 0.0 } else { jerk };
            let a1 = s.a + j * h;
            let leaves = a1 > limit * (1.0 + 1e-12) || a1 < -limit * (1.0 + 1e-12);
            let moving = s.v > 0.0 || s.a > 0.0 || (s.a == 0.0 && j > 0.0);
            if !moving {
                let starts = s.a < 0.0 && a1 > 0.0;
                return (State { d: s.d, v: 0.0, a: a1 }, leaves || starts);
            }
            let v1 = s.v + s.a * h + 0.5 * j * h * h;
            // lowest speed inside the step
            let mut v_min = v1.min(s.v);
            if j > 0.0 && s.a < 0.0 {
                let tau = -s.a / j;
                if tau < h {
                    v_min = v_min.min(s.v + s.a * tau + 0.5 * j * tau * tau);
                }
            }
            let next = State {
                d: s.d - s.v * h - 0.5 * s.a * h * h - j * h * h * h / 6.0,
                v: v1,
                a: a1,
            };
            (next, leaves || v_min < 0.0)
        }
    }
}

fn step(s: State, drive: Drive, h: f64) -> State {
    let (next, event) = try_step(s, drive, h);
    if event && h > MIN_STEP {
        let mid = step(s, drive, 0.5 * h);
        return step(mid, drive, 0.5 * h);
    }
    let limit = match drive {
        Drive::Jerk { limit, .. } => limit,
        Drive::Accel(_) => f64::INFINITY,
    };
    State {
        d: next.d,
        v: next.v.max(0.0),
        a: next.a.clamp(-limit, limit),
    }
}

/// Integrates `legs` from `start`, calling `visit(t, state)` after every
/// step. Returns the final state.
pub fn integrate(start: State, legs: &[Leg], visit: &mut impl FnMut(f64, State)) -> State {
    let mut s = start;
    if let Some(Leg {
        drive: Drive::Jerk { limit, .. },
        ..
    }) = legs.first()
    {
        s.a = s.a.clamp(-*limit, *limit);
    }
    s.v = s.v.max(0.0);
    let mut t0 = 0.0;
    for leg in legs {
        let n = (leg.duration / STEP).ceil() as usize;
        for k in 0..n {
            let elapsed = k as f64 * STEP;
            let h = STEP.min(leg.duration - elapsed);
            if h <= 0.0 {
                break;
            }
            s = step(s, leg.drive, h);
            visit(t0 + elapsed + h, s);
        }
        t0 += leg.duration;
    }
    s
}
