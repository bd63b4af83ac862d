//! Three-file comma-separated dataset format.
//!
//! `scenarios.csv`: `sample_id,cs_x,cs_y,cs_half_extent,ego_path,target_path`
//! with paths written as `x y;x y;...`.
//! `trajectories.csv`: `sample_id,agent,t,x,y` with agent `ego` or `target`.
//! `outcomes.csv`: `sample_id,a,t_A,t_C,t_open,t_char,t_crit`; `t_A` is empty
//! for rejected gaps.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::path::Path as FsPath;

use super::Dataset;
use crate::error::{Error, Result};
use crate::scenario::{ContestedSpace, Geometry, KeyTimes, Outcome, Path, Point, Sample, TimedPoint};

pub const SCENARIOS_FILE: &str = "scenarios.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const OUTCOMES_FILE: &str = "outcomes.csv";

const SCENARIO_HEADER: [&str; 6] = ["sample_id", "cs_x", "cs_y", "cs_half_extent", "ego_path", "target_path"];
const TRAJECTORY_HEADER: [&str; 5] = ["sample_id", "agent", "t", "x", "y"];
const OUTCOME_HEADER: [&str; 7] = ["sample_id", "a", "t_A", "t_C", "t_open", "t_char", "t_crit"];

fn schema(file: &str, row: usize, rule: impl Into<String>) -> Error {
    Error::Schema {
        file: file.to_string(),
        row,
        rule: rule.into(),
    }
}

fn io_err(file: &str, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => schema(file, 0, format!("{other:?}")),
    }
}

fn reader(dir: &FsPath, file: &str, header: &[&str]) -> Result<csv::Reader<File>> {
    let path = dir.join(file);
    let f = File::open(&path)?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f);
    let got = r.headers().map_err(|e| io_err(file, e))?.clone();
    for name in header {
        if !got.iter().any(|h| h == *name) {
            return Err(schema(file, 1, format!("missing column `{name}`")));
        }
    }
    if got.len() != header.len() {
        return Err(schema(file, 1, format!("expected {} columns, found {}", header.len(), got.len())));
    }
    for (i, name) in header.iter().enumerate() {
        if &got[i] != *name {
            return Err(schema(file, 1, format!("column {} must be `{name}`", i + 1)));
        }
    }
    Ok(r)
}

/// Parsed rows paired with their 1-based line number (the header is line 1).
fn rows(file: &str, r: &mut csv::Reader<File>) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| {
            let row = e.position().map_or(i + 2, |p| p.line() as usize);
            schema(file, row, e.to_string())
        })?;
        out.push((i + 2, rec));
    }
    Ok(out)
}

fn num(file: &str, row: usize, col: &str, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| schema(file, row, format!("`{col}` is not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(schema(file, row, format!("`{col}` must be finite")));
    }
    Ok(v)
}

fn parse_path(file: &str, row: usize, col: &str, s: &str) -> Result<Path> {
    let mut pts = Vec::new();
    for pair in s.split(';') {
        let mut it = pair.split_whitespace();
        let (Some(x), Some(y), None) = (it.next(), it.next(), it.next()) else {
            return Err(schema(file, row, format!("`{col}` waypoint {pair:?} is not `x y`")));
        };
        pts.push(Point::new(num(file, row, col, x)?, num(file, row, col, y)?));
    }
    Path::new(pts).map_err(|e| schema(file, row, format!("`{col}`: {e}")))
}

fn format_path(p: &Path) -> String {
    p.waypoints()
        .iter()
        .map(|w| format!("{} {}", w.x, w.y))
        .collect::<Vec<_>>()
        .join(";")
}

/// Loads the dataset stored in `dir`. The dataset name is the directory name.
pub fn load_dataset(dir: impl AsRef<FsPath>) -> Result<Dataset> {
    let dir = dir.as_ref();

    let mut geometries: BTreeMap<String, (usize, Geometry)> = BTreeMap::new();
    let mut order = Vec::new();
    let mut r = reader(dir, SCENARIOS_FILE, &SCENARIO_HEADER)?;
    for (row, rec) in rows(SCENARIOS_FILE, &mut r)? {
        let f = SCENARIOS_FILE;
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(schema(f, row, "empty sample_id"));
        }
        let center = Point::new(num(f, row, "cs_x", &rec[1])?, num(f, row, "cs_y", &rec[2])?);
        let cs = ContestedSpace::new(center, num(f, row, "cs_half_extent", &rec[3])?)
            .map_err(|e| schema(f, row, e.to_string()))?;
        let ego = parse_path(f, row, "ego_path", &rec[4])?;
        let target = parse_path(f, row, "target_path", &rec[5])?;
        let g = Geometry::new(ego, target, cs).map_err(|e| schema(f, row, e.to_string()))?;
        if geometries.insert(id.clone(), (row, g)).is_some() {
            return Err(schema(f, row, format!("duplicate sample_id `{id}`")));
        }
        order.push(id);
    }

    let mut tracks: HashMap<String, [Vec<TimedPoint>; 2]> = HashMap::new();
    let mut r = reader(dir, TRAJECTORIES_FILE, &TRAJECTORY_HEADER)?;
    for (row, rec) in rows(TRAJECTORIES_FILE, &mut r)? {
        let f = TRAJECTORIES_FILE;
        let id = &rec[0];
        if !geometries.contains_key(id) {
            return Err(schema(f, row, format!("sample_id `{id}` has no scenario row")));
        }
        let slot = match &rec[1] {
            "ego" => 0,
            "target" => 1,
            other => return Err(schema(f, row, format!("agent must be `ego` or `target`, got {other:?}"))),
        };
        let p = TimedPoint::new(
            num(f, row, "t", &rec[2])?,
            num(f, row, "x", &rec[3])?,
            num(f, row, "y", &rec[4])?,
        );
        let track = &mut tracks.entry(id.to_string()).or_default()[slot];
        if track.last().is_some_and(|q| q.t >= p.t) {
            return Err(schema(f, row, "timestamps must increase within a track"));
        }
        track.push(p);
    }

    let mut outcomes: HashMap<String, (Outcome, KeyTimes)> = HashMap::new();
    let mut r = reader(dir, OUTCOMES_FILE, &OUTCOME_HEADER)?;
    for (row, rec) in rows(OUTCOMES_FILE, &mut r)? {
        let f = OUTCOMES_FILE;
        let id = &rec[0];
        if !geometries.contains_key(id) {
            return Err(schema(f, row, format!("sample_id `{id}` has no scenario row")));
        }
        let accepted = match &rec[1] {
            "1" => true,
            "0" => false,
            other => return Err(schema(f, row, format!("`a` must be 0 or 1, got {other:?}"))),
        };
        let t_accept = match (&rec[2], accepted) {
            ("", false) => None,
            ("", true) => return Err(schema(f, row, "accepted gap needs `t_A`")),
            (_, false) => return Err(schema(f, row, "`t_A` must be empty for a rejected gap")),
            (s, true) => Some(num(f, row, "t_A", s)?),
        };
        let outcome = Outcome {
            accepted,
            t_accept,
            t_contested: num(f, row, "t_C", &rec[3])?,
        };
        let times = KeyTimes {
            gap_open: num(f, row, "t_open", &rec[4])?,
            characteristic: num(f, row, "t_char", &rec[5])?,
            critical: num(f, row, "t_crit", &rec[6])?,
        };
        if outcomes.insert(id.to_string(), (outcome, times)).is_some() {
            return Err(schema(f, row, format!("duplicate sample_id `{id}`")));
        }
    }

    let mut samples = Vec::with_capacity(order.len());
    for id in order {
        let (row, geometry) = geometries.remove(&id).expect("id collected above");
        let Some([ego_track, target_track]) = tracks.remove(&id) else {
            return Err(schema(TRAJECTORIES_FILE, 0, format!("no trajectory rows for sample `{id}`")));
        };
        let Some((outcome, times)) = outcomes.remove(&id) else {
            return Err(schema(OUTCOMES_FILE, 0, format!("no outcome row for sample `{id}`")));
        };
        let s = Sample {
            id,
            geometry,
            ego_track,
            target_track,
            outcome,
            times,
        };
        s.validate().map_err(|e| schema(SCENARIOS_FILE, row, e.to_string()))?;
        samples.push(s);
    }
    let name = dir
        .file_name()
        .map_or_else(|| "dataset".to_string(), |n| n.to_string_lossy().into_owned());
    Dataset::new(name, samples)
}

/// Writes `dataset` into `dir` (created if missing). Floats use the shortest
/// representation that parses back to the same value.
pub fn save_dataset(dataset: &Dataset, dir: impl AsRef<FsPath>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let open = |file: &str| -> Result<csv::Writer<File>> { Ok(csv::Writer::from_writer(File::create(dir.join(file))?)) };
    fn werr(file: &'static str) -> impl Fn(csv::Error) -> Error {
        move |e| io_err(file, e)
    }

    let mut w = open(SCENARIOS_FILE)?;
    w.write_record(SCENARIO_HEADER).map_err(werr(SCENARIOS_FILE))?;
    for s in &dataset.samples {
        let g = &s.geometry;
        w.write_record([
            s.id.clone(),
            g.contested.center.x.to_string(),
            g.contested.center.y.to_string(),
            g.contested.half_extent.to_string(),
            format_path(&g.ego_path),
            format_path(&g.target_path),
        ])
        .map_err(werr(SCENARIOS_FILE))?;
    }
    w.flush()?;

    let mut w = open(TRAJECTORIES_FILE)?;
    w.write_record(TRAJECTORY_HEADER).map_err(werr(TRAJECTORIES_FILE))?;
    for s in &dataset.samples {
        for (agent, track) in [("ego", &s.ego_track), ("target", &s.target_track)] {
            for p in track {
                w.write_record([
                    s.id.as_str(),
                    agent,
                    &p.t.to_string(),
                    &p.pos.x.to_string(),
                    &p.pos.y.to_string(),
                ])
                .map_err(werr(TRAJECTORIES_FILE))?;
            }
        }
    }
    w.flush()?;

    let mut w = open(OUTCOMES_FILE)?;
    w.write_record(OUTCOME_HEADER).map_err(werr(OUTCOMES_FILE))?;
    for s in &dataset.samples {
        let o = &s.outcome;
        w.write_record([
            s.id.clone(),
            if o.accepted { "1" } else { "0" }.to_string(),
            o.t_accept.map_or_else(String::new, |t| t.to_string()),
            o.t_contested.to_string(),
            s.times.gap_open.to_string(),
            s.times.characteristic.to_string(),
            s.times.critical.to_string(),
        ])
        .map_err(werr(OUTCOMES_FILE))?;
    }
    w.flush()?;
    Ok(())
}
