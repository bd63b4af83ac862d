//! Closed-form longitudinal kinematics along a path.
//!
//! Motion is described by piecewise polynomial segments in the distance to
//! the contested space. Within a segment the jerk is constant, so `d(t)` is a
//! cubic (a quadratic under constant acceleration). Speeds never go negative:
//! braking to a standstill ends the segment and the agent holds position.

use serde::{Deserialize, Serialize};

use super::poly;

/// One closed-form piece of motion starting at absolute time `t0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t0: f64,
    pub duration: f64,
    pub d0: f64,
    pub v0: f64,
    pub a0: f64,
    pub jerk: f64,
}

impl Segment {
    pub fn end(&self) -> f64 {
        self.t0 + self.duration
    }

    /// Distance to the contested space `tau` seconds into the segment.
    #[inline]
    pub fn d_at(&self, tau: f64) -> f64 {
        self.d0 - tau * (self.v0 + tau * (0.5 * self.a0 + tau * self.jerk / 6.0))
    }

    #[inline]
    pub fn v_at(&self, tau: f64) -> f64 {
        self.v0 + tau * (self.a0 + 0.5 * self.jerk * tau)
    }

    #[inline]
    pub fn a_at(&self, tau: f64) -> f64 {
        self.a0 + self.jerk * tau
    }

    pub fn d_end(&self) -> f64 {
        self.d_at(self.duration)
    }

    /// `∫ a² dt` over the first `tau` seconds.
    pub fn effort(&self, tau: f64) -> f64 {
        let (a, j) = (self.a0, self.jerk);
        tau * (a * a + tau * (a * j + tau * j * j / 3.0))
    }

    /// Offset into the segment at which `d` first reaches `level`, if it does.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        if self.d0 <= level {
            return Some(0.0);
        }
        if self.d_end() > level {
            return None;
        }
        if self.jerk == 0.0 {
            // a/2 τ² + v0 τ − s = 0, in the cancellation-free form
            let s = self.d0 - level;
            let disc = (self.v0 * self.v0 + 2.0 * self.a0 * s).max(0.0);
            let den = self.v0 + disc.sqrt();
            return Some(if den > 0.0 {
                (2.0 * s / den).min(self.duration)
            } else {
                self.duration
            });
        }
        let c = [
            self.d0 - level,
            -self.v0,
            -0.5 * self.a0,
            -self.jerk / 6.0,
        ];
        Some(poly::first_root_in(c, 0.0, self.duration))
    }
}

/// Longitudinal state. `a` is the acceleration state: the applied
/// acceleration under AC, the integrated acceleration under JC.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub d: f64,
    pub v: f64,
    pub a: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Drive {
    /// Hold this acceleration.
    Accel(f64),
    /// Apply this jerk, with the acceleration state limited to `±limit`.
    Jerk { jerk: f64, limit: f64 },
}

const MAX_PIECES: usize = 8;

/// Advances `kin` for `duration` seconds from absolute time `t0`, handing
/// each closed-form piece to `emit`. Returns the final state.
pub fn advance(
    kin: Kinematics,
    drive: Drive,
    t0: f64,
    duration: f64,
    emit: &mut impl FnMut(Segment),
) -> Kinematics {
    match drive {
        Drive::Accel(a) => advance_accel(kin, a, t0, duration, emit),
        Drive::Jerk { jerk, limit } => advance_jerk(kin, jerk, limit, t0, duration, emit),
    }
}

fn hold(d: f64, t0: f64, duration: f64) -> Segment {
    Segment {
        t0,
        duration,
        d0: d,
        ..Segment::default()
    }
}

fn advance_accel(
    kin: Kinematics,
    a: f64,
    t0: f64,
    duration: f64,
    emit: &mut impl FnMut(Segment),
) -> Kinematics {
    if duration <= 0.0 {
        return Kinematics { a, ..kin };
    }
    let v = kin.v.max(0.0);
    if v == 0.0 && a <= 0.0 {
        emit(hold(kin.d, t0, duration));
        return Kinematics { d: kin.d, v: 0.0, a };
    }
    if a < 0.0 {
        let t_stop = v / -a;
        if t_stop < duration {
            let seg = Segment {
                t0,
                duration: t_stop,
                d0: kin.d,
                v0: v,
                a0: a,
                jerk: 0.0,
            };
            // exact stopping distance v²/2|a|
            let d_stop = kin.d - 0.5 * v * t_stop;
            emit(seg);
            emit(hold(d_stop, t0 + t_stop, duration - t_stop));
            return Kinematics { d: d_stop, v: 0.0, a };
        }
    }
    let seg = Segment {
        t0,
        duration,
        d0: kin.d,
        v0: v,
        a0: a,
        jerk: 0.0,
    };
    emit(seg);
    Kinematics {
        d: seg.d_end(),
        v: seg.v_at(duration).max(0.0),
        a,
    }
}

/// Smallest `tau > 0` with `v + a tau + j tau²/2 = 0`, if the speed is
/// heading down through zero.
fn stop_time(v: f64, a: f64, j: f64) -> f64 {
    if j == 0.0 {
        return if a < 0.0 { v / -a } else { f64::INFINITY };
    }
    let roots = poly::real_roots([v, a, 0.5 * j, 0.0]);
    roots
        .as_slice()
        .iter()
        .copied()
        .filter(|&r| r > 1e-12)
        .fold(f64::INFINITY, f64::min)
}

fn advance_jerk(
    mut kin: Kinematics,
    jerk: f64,
    limit: f64,
    t0: f64,
    duration: f64,
    emit: &mut impl FnMut(Segment),
) -> Kinematics {
    let mut t = t0;
    let mut rem = duration;
    kin.v = kin.v.max(0.0);
    kin.a = kin.a.clamp(-limit, limit);
    for _ in 0..MAX_PIECES {
        if rem <= 0.0 {
            break;
        }
        let pinned = (kin.a >= limit && jerk > 0.0) || (kin.a <= -limit && jerk < 0.0);
        let j = if pinned { 0.0 } else { jerk };
        let moving = kin.v > 0.0 || kin.a > 0.0 || (kin.a == 0.0 && j > 0.0);
        if moving {
            let t_clamp = if j > 0.0 {
                (limit - kin.a) / j
            } else if j < 0.0 {
                (-limit - kin.a) / j
            } else {
                f64::INFINITY
            };
            let t_stop = stop_time(kin.v, kin.a, j);
            let tau = rem.min(t_clamp).min(t_stop);
            let seg = Segment {
                t0: t,
                duration: tau,
                d0: kin.d,
                v0: kin.v,
                a0: kin.a,
                jerk: j,
            };
            emit(seg);
            kin.d = seg.d_end();
            if tau == t_stop {
                kin.v = 0.0;
                kin.a = seg.a_at(tau).min(0.0);
            } else {
                kin.v = seg.v_at(tau).max(0.0);
                kin.a = if tau == t_clamp {
                    limit.copysign(j)
                } else {
                    seg.a_at(tau)
                };
            }
            t += tau;
            rem -= tau;
        } else {
            // standing still while the acceleration state recovers
            let t_restart = if j > 0.0 { -kin.a / j } else { f64::INFINITY };
            let tau = rem.min(t_restart);
            emit(hold(kin.d, t, tau));
            kin.a = if tau == t_restart { 0.0 } else { kin.a + j * tau };
            t += tau;
            rem -= tau;
        }
    }
    if rem > 0.0 {
        emit(hold(kin.d, t, rem));
    }
    kin
}

/// A trajectory made of contiguous segments.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
}

impl Trajectory {
    pub fn push(&mut self, seg: Segment) {
        if seg.duration > 0.0 {
            self.segments.push(seg);
        }
    }

    pub fn start(&self) -> f64 {
        self.segments.first().map_or(0.0, |s| s.t0)
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end())
    }

    fn locate(&self, t: f64) -> Option<&Segment> {
        if self.segments.is_empty() {
            return None;
        }
        let i = self.segments.partition_point(|s| s.end() < t);
        Some(&self.segments[i.min(self.segments.len() - 1)])
    }

    /// Distance at absolute time `t`; past the end the last state is
    /// extrapolated at constant speed.
    pub fn d_at(&self, t: f64) -> f64 {
        let Some(seg) = self.locate(t) else {
            return f64::NAN;
        };
        let tau = t - seg.t0;
        if tau <= seg.duration {
            seg.d_at(tau.max(0.0))
        } else {
            seg.d_end() - seg.v_at(seg.duration).max(0.0) * (tau - seg.duration)
        }
    }

    pub fn v_at(&self, t: f64) -> f64 {
        let Some(seg) = self.locate(t) else {
            return f64::NAN;
        };
        seg.v_at((t - seg.t0).clamp(0.0, seg.duration)).max(0.0)
    }

    /// First absolute time at which `d` reaches `level`.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        self.segments
            .iter()
            .find_map(|s| s.crossing(level).map(|tau| s.t0 + tau))
    }
}
