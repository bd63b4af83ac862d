use std::collections::BTreeSet;
use std::fs;

use cogap::datasets::{
    gap_size, load_dataset, make_splits, save_dataset, synth_generate, SplitKind, SynthConfig, OUTCOMES_FILE,
    SCENARIOS_FILE, TRAJECTORIES_FILE,
};
use cogap::Error;

fn small(n: usize, seed: u64) -> SynthConfig {
    SynthConfig {
        n,
        seed,
        ..Default::default()
    }
}

#[test]
fn save_load_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let mut cfg = small(25, 3);
    cfg.position_noise = 0.05;
    let ds = synth_generate(&cfg).unwrap().dataset;
    save_dataset(&ds, &a).unwrap();
    let back = load_dataset(&a).unwrap();
    assert_eq!(back.samples, ds.samples);
    assert_eq!(back.metadata.timestep, ds.metadata.timestep);
    assert_eq!(back.metadata.characteristic_gap, ds.metadata.characteristic_gap);
    save_dataset(&back, &b).unwrap();
    for f in [SCENARIOS_FILE, TRAJECTORIES_FILE, OUTCOMES_FILE] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

const MINIMAL_SCENARIOS: &str = "sample_id,cs_x,cs_y,cs_half_extent,ego_path,target_path
a,0,0,2,-50 0;2 0,0 -50;0 2
b,0,0,2,-50 0;2 0,0 -50;0 2
";

const MINIMAL_TRAJECTORIES: &str = "sample_id,agent,t,x,y
a,ego,0,-40,0
a,ego,0.1,-39,0
a,ego,0.2,-38,0
a,target,0,0,-5
a,target,0.1,0,-4.9
a,target,0.2,0,-4.8
b,ego,0,-30,0
b,ego,0.1,-29,0
b,ego,0.2,-28,0
b,target,0,0,-4
b,target,0.1,0,-4
b,target,0.2,0,-4
";

const MINIMAL_OUTCOMES: &str = "sample_id,a,t_A,t_C,t_open,t_char,t_crit
a,1,1.5,3.8,0.1,0.3,1.8
b,0,,2.8,0.1,0.2,0.8
";

fn write_minimal(dir: &std::path::Path, outcomes: &str) {
    fs::write(dir.join(SCENARIOS_FILE), MINIMAL_SCENARIOS).unwrap();
    fs::write(dir.join(TRAJECTORIES_FILE), MINIMAL_TRAJECTORIES).unwrap();
    fs::write(dir.join(OUTCOMES_FILE), outcomes).unwrap();
}

#[test]
fn minimal_two_sample_files() {
    let dir = tempfile::tempdir().unwrap();
    write_minimal(dir.path(), MINIMAL_OUTCOMES);
    let ds = load_dataset(dir.path()).unwrap();
    assert_eq!(ds.len(), 2);
    assert!(ds.get("a").unwrap().outcome.accepted);
    assert_eq!(ds.get("b").unwrap().outcome.t_accept, None);
    assert!((ds.metadata.timestep - 0.1).abs() < 1e-12);
}

#[test]
fn missing_t_c_column_names_file_row_and_rule() {
    let dir = tempfile::tempdir().unwrap();
    let no_tc = "sample_id,a,t_A,t_open,t_char,t_crit\na,1,1.5,0.1,0.3,1.8\nb,0,,0.1,0.2,0.8\n";
    write_minimal(dir.path(), no_tc);
    match load_dataset(dir.path()) {
        Err(Error::Schema { file, row, rule }) => {
            assert_eq!(file, OUTCOMES_FILE);
            assert_eq!(row, 1);
            assert!(rule.contains("t_C"), "{rule}");
        }
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn malformed_rows_are_reported_with_their_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = "sample_id,a,t_A,t_C,t_open,t_char,t_crit\na,1,1.5,3.8,0.1,0.3,1.8\nb,2,,2.8,0.1,0.2,0.8\n";
    write_minimal(dir.path(), bad);
    match load_dataset(dir.path()) {
        Err(Error::Schema { row, .. }) => assert_eq!(row, 3),
        other => panic!("expected a schema error, got {other:?}"),
    }
    let accepted_without_time = "sample_id,a,t_A,t_C,t_open,t_char,t_crit\na,1,,3.8,0.1,0.3,1.8\nb,0,,2.8,0.1,0.2,0.8\n";
    write_minimal(dir.path(), accepted_without_time);
    assert!(matches!(load_dataset(dir.path()), Err(Error::Schema { row: 2, .. })));
}

#[test]
fn generator_is_deterministic() {
    let a = synth_generate(&small(50, 11)).unwrap();
    let b = synth_generate(&small(50, 11)).unwrap();
    assert_eq!(a, b);
    let c = synth_generate(&small(50, 12)).unwrap();
    assert_ne!(a.dataset.samples, c.dataset.samples);
}

#[test]
fn degenerate_threshold_is_a_step_rule() {
    let cfg = SynthConfig {
        n: 500,
        threshold_median: 4.0,
        threshold_sigma: 0.0,
        ..Default::default()
    };
    let s = synth_generate(&cfg).unwrap();
    for (sample, t) in s.dataset.samples.iter().zip(&s.truth) {
        assert_eq!(sample.outcome.accepted, t.gap > 4.0, "{}", sample.id);
        assert_eq!(gap_size(sample) > 4.0, sample.outcome.accepted);
    }
}

#[test]
fn acceptance_rate_matches_the_analytic_rule() {
    let cfg = small(10_000, 2024);
    let s = synth_generate(&cfg).unwrap();
    let rate = s.truth.iter().filter(|t| t.accepted).count() as f64 / cfg.n as f64;
    let expected = cfg.expected_acceptance_rate();
    // 4.5 binomial standard deviations is below 2% at n = 10^4
    assert!((rate - expected).abs() < 0.02, "rate {rate}, analytic {expected}");

    // Simpson quadrature against a hand-checkable case: sigma = 0 on U(2.5, 9)
    // with threshold 5 accepts with probability 4/6.5.
    let step = SynthConfig {
        threshold_sigma: 0.0,
        ..cfg
    };
    assert!((step.expected_acceptance_rate() - 4.0 / 6.5).abs() < 1e-3);
}

#[test]
fn splits_partition_the_dataset() {
    let ds = synth_generate(&small(100, 5)).unwrap().dataset;
    let plan = make_splits(&ds, 10, 0.2, 9).unwrap();
    assert_eq!(plan.splits.len(), 11);
    assert_eq!(plan.random().count(), 10);
    let all: BTreeSet<&str> = ds.samples.iter().map(|s| s.id.as_str()).collect();
    let n_pos = ds.samples.iter().filter(|s| s.outcome.accepted).count();
    for split in &plan.splits {
        assert_eq!(split.test.len(), 20);
        let train: BTreeSet<&str> = split.train.iter().map(String::as_str).collect();
        let test: BTreeSet<&str> = split.test.iter().map(String::as_str).collect();
        assert!(train.is_disjoint(&test));
        assert_eq!(&train | &test, all);
        if split.kind == SplitKind::Random {
            let pos = split.test.iter().filter(|id| ds.get(id).unwrap().outcome.accepted).count();
            assert_eq!(pos, (0.2 * n_pos as f64).round() as usize);
        }
    }
}

#[test]
fn critical_split_holds_the_extreme_gaps() {
    let ds = synth_generate(&small(100, 5)).unwrap().dataset;
    let plan = make_splits(&ds, 10, 0.2, 9).unwrap();
    let crit = plan.critical().unwrap();
    assert_eq!(crit.kind, SplitKind::Critical);
    let smallest_accepted = ds
        .samples
        .iter()
        .filter(|s| s.outcome.accepted)
        .min_by(|a, b| gap_size(a).total_cmp(&gap_size(b)))
        .unwrap();
    let largest_rejected = ds
        .samples
        .iter()
        .filter(|s| !s.outcome.accepted)
        .max_by(|a, b| gap_size(a).total_cmp(&gap_size(b)))
        .unwrap();
    assert!(crit.test.contains(&smallest_accepted.id));
    assert!(crit.test.contains(&largest_rejected.id));
    let n_acc = crit.test.iter().filter(|id| ds.get(id).unwrap().outcome.accepted).count();
    assert_eq!(n_acc, 10);
    // every accepted test gap is no larger than every accepted training gap
    let max_test = crit
        .test
        .iter()
        .map(|id| ds.get(id).unwrap())
        .filter(|s| s.outcome.accepted)
        .map(gap_size)
        .fold(f64::MIN, f64::max);
    let min_train = crit
        .train
        .iter()
        .map(|id| ds.get(id).unwrap())
        .filter(|s| s.outcome.accepted)
        .map(gap_size)
        .fold(f64::MAX, f64::min);
    assert!(max_test <= min_train);
}

#[test]
fn splits_ignore_sample_order() {
    let mut ds = synth_generate(&small(60, 8)).unwrap().dataset;
    let a = make_splits(&ds, 10, 0.2, 4).unwrap();
    ds.samples.reverse();
    let b = make_splits(&ds, 10, 0.2, 4).unwrap();
    assert_eq!(a, b);
    let c = make_splits(&ds, 10, 0.2, 5).unwrap();
    assert_eq!(a.critical(), c.critical());
    assert_ne!(a.splits[0], c.splits[0]);
}

#[test]
fn single_class_cannot_be_split() {
    let cfg = SynthConfig {
        n: 30,
        threshold_median: 1.0,
        threshold_sigma: 0.0,
        ..Default::default()
    };
    let ds = synth_generate(&cfg).unwrap().dataset;
    assert!(matches!(make_splits(&ds, 10, 0.2, 0), Err(Error::NotEnoughSamples(_))));
}
