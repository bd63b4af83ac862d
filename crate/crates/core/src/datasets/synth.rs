//! Synthetic perpendicular-crossing scenarios with a known acceptance rule.
//!
//! The ego drives straight along the x axis at constant speed; the target
//! waits (by default) at a stop line on the y axis. At gap opening the ego is
//! `G` seconds from the contested space. The target accepts iff `G` exceeds
//! its own threshold, drawn from a lognormal distribution. Accepting targets
//! keep their speed for a reaction time and then accelerate across; rejecting
//! targets stop short of the contested space, wait for the ego to clear it,
//! react and then accelerate across.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatNormal};

use super::Dataset;
use crate::error::{Error, Result};
use crate::scenario::{ContestedSpace, Geometry, KeyTimes, Outcome, Path, Point, Sample, TimedPoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn sample(self, rng: &mut impl Rng) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..self.hi)
        } else {
            self.lo
        }
    }

    fn check(self, name: &str, min: f64) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo >= min && self.hi >= self.lo) {
            return Err(Error::InvalidConfig(format!(
                "{name} range [{}, {}] must satisfy {min} <= lo <= hi",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    /// Ego speed (m/s).
    pub ego_speed: Range,
    /// Time gap offered at gap opening (s).
    pub gap: Range,
    /// Target distance to the contested space at gap opening (m).
    pub target_distance: Range,
    /// Target speed at gap opening (m/s).
    pub target_speed: Range,
    /// Median of the acceptance threshold (s).
    pub threshold_median: f64,
    /// Log-scale spread of the threshold; 0 makes it deterministic.
    pub threshold_sigma: f64,
    pub reaction_time: Range,
    pub acceleration: Range,
    pub speed_cap: f64,
    pub timestep: f64,
    /// Gap-opening time (s); tracks start at 0.
    pub gap_open: f64,
    /// Remaining gap at the characteristic-gap timestamp (s).
    pub characteristic_gap: f64,
    /// Remaining gap at the critical-decision timestamp (s).
    pub critical_gap: f64,
    /// Recording continues this long after both agents have entered or left (s).
    pub tail: f64,
    /// Standard deviation of Gaussian position noise added to the tracks (m).
    pub position_noise: f64,
    pub half_extent: f64,
    /// Length of each path before the contested-space center (m).
    pub approach_length: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 400,
            seed: 7,
            ego_speed: Range::new(8.0, 14.0),
            gap: Range::new(2.5, 9.0),
            target_distance: Range::new(1.0, 3.0),
            target_speed: Range::new(0.0, 0.0),
            threshold_median: 5.0,
            threshold_sigma: 0.3,
            reaction_time: Range::new(0.2, 0.6),
            acceleration: Range::new(2.0, 3.5),
            speed_cap: 10.0,
            timestep: 0.1,
            gap_open: 1.0,
            characteristic_gap: 3.5,
            critical_gap: 2.5,
            tail: 2.0,
            position_noise: 0.0,
            half_extent: 2.0,
            approach_length: 200.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        self.ego_speed.check("ego speed", f64::MIN_POSITIVE)?;
        self.gap.check("gap", f64::MIN_POSITIVE)?;
        self.target_distance.check("target distance", f64::MIN_POSITIVE)?;
        self.target_speed.check("target speed", 0.0)?;
        self.reaction_time.check("reaction time", 0.0)?;
        self.acceleration.check("acceleration", f64::MIN_POSITIVE)?;
        let positive = [
            ("threshold median", self.threshold_median),
            ("speed cap", self.speed_cap),
            ("timestep", self.timestep),
            ("half extent", self.half_extent),
            ("approach length", self.approach_length),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        let non_negative = [
            ("threshold sigma", self.threshold_sigma),
            ("gap opening", self.gap_open),
            ("characteristic gap", self.characteristic_gap),
            ("critical gap", self.critical_gap),
            ("tail", self.tail),
            ("position noise", self.position_noise),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative"));
            }
        }
        if self.target_speed.hi > self.speed_cap {
            return bad("target speed range exceeds the speed cap".into());
        }
        // The ego must start on its path.
        let ego_start = self.ego_speed.hi * (self.gap.hi + self.gap_open);
        if ego_start > self.approach_length - self.half_extent {
            return bad(format!(
                "ego would start {ego_start:.1} m before the contested space, beyond the path"
            ));
        }
        let target_start = self.target_distance.hi + self.target_speed.hi * self.gap_open;
        if target_start > self.approach_length - self.half_extent {
            return bad("target would start beyond its path".into());
        }
        // Reaction time at constant speed must not reach the contested space.
        if self.target_speed.hi * self.reaction_time.hi >= self.target_distance.lo {
            return bad("target could reach the contested space during its reaction time".into());
        }
        // An accepting target must enter before the ego in every case.
        let worst = self.reaction_time.hi + (2.0 * self.target_distance.hi / self.acceleration.lo).sqrt();
        if worst >= self.gap.lo {
            return bad(format!(
                "slowest accepting crossing ({worst:.2} s) does not fit the smallest gap"
            ));
        }
        Ok(())
    }

    /// Probability that a gap of `gap` seconds is accepted.
    pub fn acceptance_probability(&self, gap: f64) -> f64 {
        if self.threshold_sigma == 0.0 {
            return if gap > self.threshold_median { 1.0 } else { 0.0 };
        }
        let z = (gap.ln() - self.threshold_median.ln()) / self.threshold_sigma;
        StatNormal::standard().cdf(z)
    }

    /// Acceptance probability averaged over the gap distribution (Simpson's
    /// rule on 2000 intervals).
    pub fn expected_acceptance_rate(&self) -> f64 {
        let (a, b) = (self.gap.lo, self.gap.hi);
        if b <= a {
            return self.acceptance_probability(a);
        }
        let n = 2000;
        let h = (b - a) / n as f64;
        let mut s = self.acceptance_probability(a) + self.acceptance_probability(b);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * self.acceptance_probability(a + k as f64 * h);
        }
        s * h / 3.0 / (b - a)
    }
}

/// Generative values behind one synthetic sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub id: String,
    pub gap: f64,
    pub threshold: f64,
    pub accepted: bool,
    pub ego_speed: f64,
    pub target_distance: f64,
    pub target_speed: f64,
    pub reaction_time: f64,
    pub acceleration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub truth: Vec<SynthTruth>,
    pub config: SynthConfig,
}

/// Constant-acceleration piece of a 1D motion: distance to the contested
/// space is `d0 − v0·τ − a·τ²/2` for `τ = t − t0`.
#[derive(Clone, Copy, Debug)]
struct Piece {
    t0: f64,
    d0: f64,
    v0: f64,
    a: f64,
}

impl Piece {
    fn d(&self, t: f64) -> f64 {
        let tau = t - self.t0;
        self.d0 - self.v0 * tau - 0.5 * self.a * tau * tau
    }

    fn v(&self, t: f64) -> f64 {
        self.v0 + self.a * (t - self.t0)
    }

    /// Time at which distance `level` is reached, if it is within `[t0, t_end)`
    /// and the motion is forward.
    fn time_to(&self, level: f64) -> f64 {
        let s = self.d0 - level;
        if s <= 0.0 {
            return self.t0;
        }
        if self.a == 0.0 {
            return if self.v0 > 0.0 { self.t0 + s / self.v0 } else { f64::INFINITY };
        }
        let disc = self.v0 * self.v0 + 2.0 * self.a * s;
        if disc < 0.0 {
            return f64::INFINITY;
        }
        self.t0 + 2.0 * s / (self.v0 + disc.sqrt())
    }
}

struct Profile(Vec<Piece>);

impl Profile {
    fn piece(&self, t: f64) -> &Piece {
        let i = self.0.iter().rposition(|p| p.t0 <= t).unwrap_or(0);
        &self.0[i]
    }

    /// Before the first piece the motion is at constant speed.
    fn d(&self, t: f64) -> f64 {
        let first = &self.0[0];
        if t < first.t0 {
            return first.d0 - first.v0 * (t - first.t0);
        }
        self.piece(t).d(t)
    }

    fn entry_time(&self) -> f64 {
        for (i, p) in self.0.iter().enumerate() {
            let t = p.time_to(0.0);
            let end = self.0.get(i + 1).map_or(f64::INFINITY, |q| q.t0);
            if t < end {
                return t;
            }
        }
        f64::INFINITY
    }

    /// Accelerate from `(d, v)` at time `t` with `a` up to `cap`, then cruise.
    fn push_launch(&mut self, t: f64, d: f64, v: f64, a: f64, cap: f64) {
        self.0.push(Piece { t0: t, d0: d, v0: v, a });
        let t_cap = t + (cap - v).max(0.0) / a;
        let p = Piece { t0: t, d0: d, v0: v, a };
        self.0.push(Piece {
            t0: t_cap,
            d0: p.d(t_cap),
            v0: p.v(t_cap),
            a: 0.0,
        });
    }
}

pub fn synth_generate(config: &SynthConfig) -> Result<Synthetic> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let threshold = if config.threshold_sigma > 0.0 {
        Some(
            LogNormal::new(config.threshold_median.ln(), config.threshold_sigma)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?,
        )
    } else {
        None
    };
    let noise = if config.position_noise > 0.0 {
        Some(Normal::new(0.0, config.position_noise).map_err(|e| Error::InvalidConfig(e.to_string()))?)
    } else {
        None
    };

    let h = config.half_extent;
    let l = config.approach_length;
    let contested = ContestedSpace::new(Point::new(0.0, 0.0), h)?;
    let geometry = Geometry::new(
        Path::new(vec![Point::new(-l, 0.0), Point::new(h, 0.0)])?,
        Path::new(vec![Point::new(0.0, -l), Point::new(0.0, h)])?,
        contested,
    )?;

    let width = (config.n.max(1) as f64).log10().floor() as usize + 1;
    let t_open = config.gap_open;
    let mut samples = Vec::with_capacity(config.n);
    let mut truth = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let id = format!("s{i:0width$}");
        let v_e = config.ego_speed.sample(&mut rng);
        let gap = config.gap.sample(&mut rng);
        let d_t = config.target_distance.sample(&mut rng);
        let v_t = config.target_speed.sample(&mut rng);
        let tau = threshold.map_or(config.threshold_median, |dist| dist.sample(&mut rng));
        let r = config.reaction_time.sample(&mut rng);
        let a = config.acceleration.sample(&mut rng);
        let accepted = gap > tau;

        let t_c = t_open + gap;
        let ego_exit = t_c + 2.0 * h / v_e;
        let ego = Piece {
            t0: t_open,
            d0: gap * v_e,
            v0: v_e,
            a: 0.0,
        };

        let mut target = Profile(vec![Piece {
            t0: t_open,
            d0: d_t,
            v0: v_t,
            a: 0.0,
        }]);
        if accepted {
            let t = t_open + r;
            target.push_launch(t, d_t - v_t * r, v_t, a, config.speed_cap);
        } else {
            // a moving target brakes to a stop; a waiting one stays put
            let (d_stop, t_stop) = if v_t > 0.0 {
                let d_stop = (0.5 * d_t).min(0.5);
                let b = v_t * v_t / (2.0 * (d_t - d_stop));
                target.0[0].a = -b;
                let t_stop = t_open + v_t / b;
                target.0.push(Piece {
                    t0: t_stop,
                    d0: d_stop,
                    v0: 0.0,
                    a: 0.0,
                });
                (d_stop, t_stop)
            } else {
                (d_t, t_open)
            };
            let t_go = ego_exit.max(t_stop) + r;
            target.push_launch(t_go, d_stop, 0.0, a, config.speed_cap);
        }
        let t_entry = target.entry_time();
        let t_accept = accepted.then_some(t_entry);

        let t_end = t_entry.max(ego_exit) + config.tail;
        let n_steps = (t_end / config.timestep).ceil() as usize;
        let mut ego_track = Vec::with_capacity(n_steps + 1);
        let mut target_track = Vec::with_capacity(n_steps + 1);
        for k in 0..=n_steps {
            let t = k as f64 * config.timestep;
            let de = ego.d(t);
            let dt = target.d(t);
            let mut e = Point::new(-h - de, 0.0);
            let mut g = Point::new(0.0, -h - dt);
            if let Some(n) = noise {
                e.x += n.sample(&mut rng);
                e.y += n.sample(&mut rng);
                g.x += n.sample(&mut rng);
                g.y += n.sample(&mut rng);
            }
            ego_track.push(TimedPoint { t, pos: e });
            target_track.push(TimedPoint { t, pos: g });
        }

        samples.push(Sample {
            id: id.clone(),
            geometry: geometry.clone(),
            ego_track,
            target_track,
            outcome: Outcome {
                accepted,
                t_accept,
                t_contested: t_c,
            },
            times: KeyTimes {
                gap_open: t_open,
                characteristic: t_c - config.characteristic_gap,
                critical: t_c - config.critical_gap,
            },
        });
        truth.push(SynthTruth {
            id,
            gap,
            threshold: tau,
            accepted,
            ego_speed: v_e,
            target_distance: d_t,
            target_speed: v_t,
            reaction_time: r,
            acceleration: a,
        });
    }
    let dataset = Dataset::new("synthetic", samples)?;
    Ok(Synthetic {
        dataset,
        truth,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        SynthConfig::default().validate().unwrap();
    }

    #[test]
    fn accepted_targets_enter_first() {
        let s = synth_generate(&SynthConfig { n: 200, ..Default::default() }).unwrap();
        for (sample, t) in s.dataset.samples.iter().zip(&s.truth) {
            let o = sample.outcome;
            assert_eq!(o.accepted, t.accepted);
            if let Some(t_a) = o.t_accept {
                assert!(t_a < o.t_contested, "{}", sample.id);
                assert!(t_a > sample.times.gap_open);
            }
            assert!((o.t_contested - sample.times.gap_open - t.gap).abs() < 1e-9);
        }
    }

    #[test]
    fn rejecting_target_waits_for_the_ego() {
        let cfg = SynthConfig { n: 100, ..Default::default() };
        let s = synth_generate(&cfg).unwrap();
        for (sample, t) in s.dataset.samples.iter().zip(&s.truth) {
            if t.accepted {
                continue;
            }
            let exit = sample.outcome.t_contested + 2.0 * cfg.half_extent / t.ego_speed;
            for p in &sample.target_track {
                if p.t < exit {
                    assert!(p.pos.y < -cfg.half_extent, "{} at {}", sample.id, p.t);
                }
            }
        }
    }

    #[test]
    fn inconsistent_config_rejected() {
        let cfg = SynthConfig {
            gap: Range::new(1.0, 9.0),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(SynthConfig { n: 0, ..Default::default() }.validate().is_err());
    }
}
