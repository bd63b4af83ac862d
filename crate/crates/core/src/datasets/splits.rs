//! Ten stratified random train/test splits plus one critical split.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::scenario::Sample;

pub const DEFAULT_TEST_FRACTION: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Random,
    Critical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub index: usize,
    pub kind: SplitKind,
    /// Sorted sample ids.
    pub train: Vec<String>,
    /// Sorted sample ids.
    pub test: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub test_fraction: f64,
    pub seed: u64,
    pub splits: Vec<Split>,
}

impl SplitPlan {
    pub fn random(&self) -> impl Iterator<Item = &Split> {
        self.splits.iter().filter(|s| s.kind == SplitKind::Random)
    }

    pub fn critical(&self) -> Option<&Split> {
        self.splits.iter().find(|s| s.kind == SplitKind::Critical)
    }
}

/// Time gap offered at gap opening (s).
pub fn gap_size(sample: &Sample) -> f64 {
    sample.outcome.t_contested - sample.times.gap_open
}

fn by_gap_then_id(a: &&Sample, b: &&Sample, descending: bool) -> Ordering {
    let g = gap_size(a).total_cmp(&gap_size(b));
    let g = if descending { g.reverse() } else { g };
    g.then_with(|| a.id.cmp(&b.id))
}

fn finish(index: usize, kind: SplitKind, all: &[&str], test: Vec<String>) -> Split {
    let mut test = test;
    test.sort();
    let train = all
        .iter()
        .filter(|id| test.binary_search_by(|t| t.as_str().cmp(id)).is_err())
        .map(|id| id.to_string())
        .collect();
    Split {
        index,
        kind,
        train,
        test,
    }
}

/// `n_random` stratified random splits followed by the critical split.
/// The result depends only on the set of samples and the seed.
pub fn make_splits(dataset: &Dataset, n_random: usize, test_fraction: f64, seed: u64) -> Result<SplitPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut sorted: Vec<&Sample> = dataset.samples.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let pos: Vec<&Sample> = sorted.iter().copied().filter(|s| s.outcome.accepted).collect();
    let neg: Vec<&Sample> = sorted.iter().copied().filter(|s| !s.outcome.accepted).collect();
    if pos.len() < 2 || neg.len() < 2 {
        return Err(Error::NotEnoughSamples(format!(
            "need at least 2 accepted and 2 rejected samples, got {} and {}",
            pos.len(),
            neg.len()
        )));
    }
    let n = sorted.len();
    let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let n_test_pos = ((test_fraction * pos.len() as f64).round() as usize)
        .clamp(1, pos.len() - 1)
        .min(n_test - 1)
        .max(n_test.saturating_sub(neg.len() - 1));
    let n_test_neg = n_test - n_test_pos;
    let all: Vec<&str> = sorted.iter().map(|s| s.id.as_str()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = Vec::with_capacity(n_random + 1);
    for index in 0..n_random {
        let mut p = pos.clone();
        let mut q = neg.clone();
        p.shuffle(&mut rng);
        q.shuffle(&mut rng);
        let test = p[..n_test_pos]
            .iter()
            .chain(&q[..n_test_neg])
            .map(|s| s.id.clone())
            .collect();
        splits.push(finish(index, SplitKind::Random, &all, test));
    }

    let mut p = pos.clone();
    let mut q = neg.clone();
    p.sort_by(|a, b| by_gap_then_id(a, b, false));
    q.sort_by(|a, b| by_gap_then_id(a, b, true));
    let mut test = Vec::with_capacity(n_test);
    let (mut i, mut j) = (0, 0);
    while test.len() < n_test {
        let take_pos = (test.len() % 2 == 0 && i < p.len()) || j >= q.len();
        if take_pos {
            test.push(p[i].id.clone());
            i += 1;
        } else {
            test.push(q[j].id.clone());
            j += 1;
        }
    }
    splits.push(finish(n_random, SplitKind::Critical, &all, test));

    Ok(SplitPlan {
        test_fraction,
        seed,
        splits,
    })
}
