//! Scenario geometry and the projection between recorded 2D motion and the
//! quasi-1D "distance to contested space" coordinates the simulator runs in.
//!
//! Every agent moves along a [`Path`] (a polyline supplied with the data).
//! Its 1D coordinate `d` is the arc length still to travel before it reaches
//! the near edge of the [`ContestedSpace`]; `d` is positive before entry,
//! zero at the entry point and negative once the agent is inside or past it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lateral slack allowed between a recorded position and its path.
pub const DEFAULT_LATERAL_TOLERANCE: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedPoint {
    pub t: f64,
    pub pos: Point,
}

impl TimedPoint {
    pub const fn new(t: f64, x: f64, y: f64) -> Self {
        Self {
            t,
            pos: Point::new(x, y),
        }
    }
}

/// Polyline with precomputed cumulative arc length.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    waypoints: Vec<Point>,
    cumulative: Vec<f64>,
}

impl Path {
    pub fn new(waypoints: Vec<Point>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidPath(format!(
                "need at least 2 waypoints, got {}",
                waypoints.len()
            )));
        }
        let mut cumulative = Vec::with_capacity(waypoints.len());
        cumulative.push(0.0);
        for (i, pair) in waypoints.windows(2).enumerate() {
            if !(pair[0].x.is_finite() && pair[0].y.is_finite())
                || !(pair[1].x.is_finite() && pair[1].y.is_finite())
            {
                return Err(Error::InvalidPath(format!(
                    "non-finite waypoint near index {i}"
                )));
            }
            let len = pair[0].distance(pair[1]);
            if len <= 0.0 {
                return Err(Error::InvalidPath(format!(
                    "waypoints {i} and {} coincide",
                    i + 1
                )));
            }
            cumulative.push(cumulative[i] + len);
        }
        Ok(Self {
            waypoints,
            cumulative,
        })
    }

    pub fn waypoints(&self) -> &[Point] {
        &self.waypoints
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("path has waypoints")
    }

    /// Point at arc length `s`, clamped to the path's extent.
    pub fn point_at(&self, s: f64) -> Point {
        let s = s.clamp(0.0, self.length());
        // first segment whose end lies at or beyond s
        let seg = match self.cumulative[1..].iter().position(|&c| c >= s) {
            Some(i) => i,
            None => self.waypoints.len() - 2,
        };
        let (a, b) = (self.waypoints[seg], self.waypoints[seg + 1]);
        let len = self.cumulative[seg + 1] - self.cumulative[seg];
        let f = (s - self.cumulative[seg]) / len;
        Point::new(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))
    }

    /// Nearest point on the polyline: returns `(arc length, lateral offset)`.
    /// Ties go to the earliest segment.
    pub fn foot_point(&self, p: Point) -> (f64, f64) {
        let mut best_s = 0.0;
        let mut best_dist = f64::INFINITY;
        for (i, pair) in self.waypoints.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = dx * dx + dy * dy;
            let f = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
            let foot = Point::new(a.x + f * dx, a.y + f * dy);
            let dist = foot.distance(p);
            if dist < best_dist {
                best_dist = dist;
                best_s = self.cumulative[i] + f * (self.cumulative[i + 1] - self.cumulative[i]);
            }
        }
        (best_s, best_dist)
    }
}

impl Serialize for Path {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.waypoints.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Path {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pts = Vec::<Point>::deserialize(d)?;
        Path::new(pts).map_err(serde::de::Error::custom)
    }
}

/// Square region shared by both paths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContestedSpace {
    pub center: Point,
    /// Half of the region's length measured along each path.
    pub half_extent: f64,
}

impl ContestedSpace {
    pub fn new(center: Point, half_extent: f64) -> Result<Self> {
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(Error::InvalidContestedSpace(format!(
                "half-extent must be positive, got {half_extent}"
            )));
        }
        Ok(Self {
            center,
            half_extent,
        })
    }

    /// Distance an agent travels between entering and leaving the region.
    pub fn length(&self) -> f64 {
        2.0 * self.half_extent
    }

    /// Arc length on `path` at which the region begins.
    pub fn entry_arc_length(&self, path: &Path) -> f64 {
        path.foot_point(self.center).0 - self.half_extent
    }

    pub fn entry_point(&self, path: &Path) -> Point {
        path.point_at(self.entry_arc_length(path))
    }
}

/// Quasi-1D agent state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectedState {
    /// Distance along the path to the contested-space entry (positive before entry).
    pub d: f64,
    /// Speed along the path.
    pub v: f64,
}

impl ProjectedState {
    pub const fn new(d: f64, v: f64) -> Self {
        Self { d, v }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedState {
    pub t: f64,
    pub state: ProjectedState,
}

/// Projects a timestamped 2D trajectory onto `path`.
///
/// Speeds come from finite differences of `d` (backward differences, the
/// first point reuses the first forward difference). A single-point
/// trajectory gets speed zero.
pub fn project_to_path(
    trajectory: &[TimedPoint],
    path: &Path,
    contested: &ContestedSpace,
    lateral_tolerance: f64,
) -> Result<Vec<TimedState>> {
    let entry = contested.entry_arc_length(path);
    let mut ds = Vec::with_capacity(trajectory.len());
    for (index, tp) in trajectory.iter().enumerate() {
        if !(tp.t.is_finite() && tp.pos.x.is_finite() && tp.pos.y.is_finite()) {
            return Err(Error::NonFinite("trajectory point"));
        }
        let (s, offset) = path.foot_point(tp.pos);
        if offset > lateral_tolerance {
            return Err(Error::Projection {
                index,
                x: tp.pos.x,
                y: tp.pos.y,
                offset,
                tolerance: lateral_tolerance,
            });
        }
        ds.push(entry - s);
    }
    let speed = |i: usize, j: usize| -> Result<f64> {
        let dt = trajectory[j].t - trajectory[i].t;
        if dt <= 0.0 {
            return Err(Error::DegenerateWindow(format!(
                "timestamps {} and {} are not increasing",
                trajectory[i].t, trajectory[j].t
            )));
        }
        Ok(-(ds[j] - ds[i]) / dt)
    };
    let mut out = Vec::with_capacity(trajectory.len());
    for (k, tp) in trajectory.iter().enumerate() {
        let v = match (k, trajectory.len()) {
            (_, 1) => 0.0,
            (0, _) => speed(0, 1)?,
            _ => speed(k - 1, k)?,
        };
        out.push(TimedState {
            t: tp.t,
            state: ProjectedState::new(ds[k], v),
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodedPoint {
    pub t: f64,
    pub pos: Point,
    /// The requested distance fell outside the path and was clamped.
    pub clamped: bool,
}

/// Inverse of [`project_to_path`] for points on the path.
pub fn decode_to_2d(
    distances: &[(f64, f64)],
    path: &Path,
    contested: &ContestedSpace,
) -> Vec<DecodedPoint> {
    let entry = contested.entry_arc_length(path);
    decode_with_entry(distances, path, entry)
}

pub(crate) fn decode_with_entry(
    distances: &[(f64, f64)],
    path: &Path,
    entry: f64,
) -> Vec<DecodedPoint> {
    distances
        .iter()
        .map(|&(t, d)| {
            let s = entry - d;
            let clamped = s < 0.0 || s > path.length();
            DecodedPoint {
                t,
                pos: path.point_at(s),
                clamped,
            }
        })
        .collect()
}

/// Path geometry of one interaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub ego_path: Path,
    pub target_path: Path,
    pub contested: ContestedSpace,
}

impl Geometry {
    pub fn new(ego_path: Path, target_path: Path, contested: ContestedSpace) -> Result<Self> {
        let g = Self {
            ego_path,
            target_path,
            contested,
        };
        for (name, path) in [("ego", &g.ego_path), ("target", &g.target_path)] {
            let (s_center, offset) = path.foot_point(contested.center);
            if offset > contested.half_extent {
                return Err(Error::InvalidContestedSpace(format!(
                    "{name} path passes {offset:.3} m from the contested-space center"
                )));
            }
            let end = path.length();
            if end <= s_center - contested.half_extent
                || end > s_center + contested.half_extent + 1e-9
            {
                return Err(Error::InvalidContestedSpace(format!(
                    "{name} path must terminate inside the contested space"
                )));
            }
        }
        Ok(g)
    }

    pub fn path(&self, role: Role) -> &Path {
        match role {
            Role::Ego => &self.ego_path,
            Role::Target => &self.target_path,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Ego,
    Target,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Ego => "ego",
            Role::Target => "target",
        }
    }
}

/// Ground-truth outcome of a recorded interaction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub accepted: bool,
    /// Time the target reached the contested space; present iff accepted.
    pub t_accept: Option<f64>,
    /// Time the ego reached the contested space.
    pub t_contested: f64,
}

/// Reference timestamps used by the evaluation protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyTimes {
    pub gap_open: f64,
    pub characteristic: f64,
    pub critical: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub geometry: Geometry,
    pub ego_track: Vec<TimedPoint>,
    pub target_track: Vec<TimedPoint>,
    pub outcome: Outcome,
    pub times: KeyTimes,
}

/// The last `n_i` observations of both agents at or before a prediction time.
#[derive(Clone, Copy, Debug)]
pub struct InputWindow<'a> {
    pub t0: f64,
    pub ego: &'a [TimedPoint],
    pub target: &'a [TimedPoint],
}

impl Sample {
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidSample {
            id: self.id.clone(),
            reason,
        };
        let o = &self.outcome;
        if !o.t_contested.is_finite() {
            return Err(fail("t_C must be finite".into()));
        }
        match (o.accepted, o.t_accept) {
            (true, Some(t)) if t.is_finite() => {}
            (true, _) => return Err(fail("accepted gap needs a finite t_A".into())),
            (false, Some(_)) => return Err(fail("t_A present on a rejected gap".into())),
            (false, None) => {}
        }
        for (name, track) in [("ego", &self.ego_track), ("target", &self.target_track)] {
            if track.len() < 2 {
                return Err(fail(format!("{name} track has fewer than 2 points")));
            }
            let dt = track[1].t - track[0].t;
            if !(dt > 0.0) {
                return Err(fail(format!("{name} track timestamps not increasing")));
            }
            for w in track.windows(2) {
                let step = w[1].t - w[0].t;
                if (step - dt).abs() > 1e-6 * dt.max(1.0) {
                    return Err(fail(format!("{name} track is not uniformly sampled")));
                }
            }
        }
        Ok(())
    }

    /// Observation window ending at the last timestamp `<= t_eval` shared by
    /// both tracks.
    pub fn window(&self, t_eval: f64, n_i: usize) -> Result<InputWindow<'_>> {
        let tol = 1e-9;
        let cut = |track: &'_ [TimedPoint]| track.iter().rposition(|p| p.t <= t_eval + tol);
        let (Some(ie), Some(it)) = (cut(&self.ego_track), cut(&self.target_track)) else {
            return Err(Error::DegenerateWindow(format!(
                "sample {}: no observations before t = {t_eval}",
                self.id
            )));
        };
        if ie + 1 < n_i || it + 1 < n_i {
            return Err(Error::DegenerateWindow(format!(
                "sample {}: fewer than {n_i} observations before t = {t_eval}",
                self.id
            )));
        }
        let ego = &self.ego_track[ie + 1 - n_i..=ie];
        let target = &self.target_track[it + 1 - n_i..=it];
        let t0 = ego[ego.len() - 1].t;
        if (target[target.len() - 1].t - t0).abs() > tol {
            return Err(Error::DegenerateWindow(format!(
                "sample {}: ego and target observations are not synchronised",
                self.id
            )));
        }
        Ok(InputWindow { t0, ego, target })
    }

    /// Initial conditions for a prediction made at `t_eval`.
    pub fn initial_conditions_at(
        &self,
        t_eval: f64,
        n_i: usize,
        lateral_tolerance: f64,
    ) -> Result<(f64, ProjectedState, ProjectedState)> {
        let w = self.window(t_eval, n_i)?;
        let (ego, target) = initial_conditions(&self.geometry, &w, lateral_tolerance)?;
        Ok((w.t0, ego, target))
    }
}

/// Current projected states of both agents: position from the newest
/// observation, speed from the final finite difference.
pub fn initial_conditions(
    geometry: &Geometry,
    window: &InputWindow<'_>,
    lateral_tolerance: f64,
) -> Result<(ProjectedState, ProjectedState)> {
    let last = |track: &[TimedPoint], path: &Path| -> Result<ProjectedState> {
        if track.len() < 2 {
            return Err(Error::DegenerateWindow(
                "need at least two observations".into(),
            ));
        }
        let span = track[track.len() - 1].t - track[0].t;
        if !(span > 0.0) {
            return Err(Error::DegenerateWindow(
                "observation window has zero duration".into(),
            ));
        }
        let tail = &track[track.len() - 2..];
        let projected = project_to_path(tail, path, &geometry.contested, lateral_tolerance)?;
        Ok(projected[1].state)
    };
    Ok((
        last(window.ego, &geometry.ego_path)?,
        last(window.target, &geometry.target_path)?,
    ))
}
