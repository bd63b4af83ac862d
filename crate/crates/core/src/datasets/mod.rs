//! Datasets: the three-file text format, a synthetic generator, and the
//! train/test split protocol.

mod io;
mod splits;
mod synth;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Sample;

pub use io::{load_dataset, save_dataset, OUTCOMES_FILE, SCENARIOS_FILE, TRAJECTORIES_FILE};
pub use splits::{gap_size, make_splits, Split, SplitKind, SplitPlan, DEFAULT_TEST_FRACTION};
pub use synth::{synth_generate, Range, SynthConfig, SynthTruth, Synthetic};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub name: String,
    /// Observation timestep shared by every track (s).
    pub timestep: f64,
    /// Remaining gap at the characteristic-gap timestamp (s).
    pub characteristic_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub metadata: Metadata,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Builds a dataset, validating every sample and deriving the metadata
    /// from the samples.
    pub fn new(name: impl Into<String>, samples: Vec<Sample>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &samples {
            s.validate()?;
            if !seen.insert(s.id.as_str()) {
                return Err(Error::InvalidSample {
                    id: s.id.clone(),
                    reason: "duplicate sample id".into(),
                });
            }
        }
        let Some(first) = samples.first() else {
            return Err(Error::NotEnoughSamples("dataset has no samples".into()));
        };
        let timestep = first.ego_track[1].t - first.ego_track[0].t;
        for s in &samples {
            for track in [&s.ego_track, &s.target_track] {
                let dt = track[1].t - track[0].t;
                if (dt - timestep).abs() > 1e-6 * timestep.max(1.0) {
                    return Err(Error::InvalidSample {
                        id: s.id.clone(),
                        reason: format!("timestep {dt} differs from the dataset timestep {timestep}"),
                    });
                }
            }
        }
        let mut gaps: Vec<f64> = samples
            .iter()
            .map(|s| s.outcome.t_contested - s.times.characteristic)
            .collect();
        gaps.sort_by(f64::total_cmp);
        let characteristic_gap = gaps[gaps.len() / 2];
        Ok(Self {
            metadata: Metadata {
                name: name.into(),
                timestep,
                characteristic_gap,
            },
            samples,
        })
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.id == id)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}
