use cogap::datasets::{make_splits, synth_generate, SynthConfig};
use cogap::evaluation::training_items;
use cogap::fitting::{bayes_opt, evaluate_loss, fit, latin_hypercube, FitConfig, FitSchedule, TrainingItem};
use cogap::model::{Bounds, ModelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn quadratic_optimum_is_found_reliably() {
    let mut hits = 0;
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = bayes_opt(|x| (x[0] - 0.3).powi(2), &[(0.0, 1.0)], 30, 10, &mut rng).unwrap();
        if (r.best_x[0] - 0.3).abs() <= 0.05 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits} of 100 runs within 0.05");
}

#[test]
fn constant_objective_returns_the_constant() {
    let bounds = [(-1.0, 2.0), (3.0, 4.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let r = bayes_opt(|_| 7.5, &bounds, 12, 4, &mut rng).unwrap();
    assert_eq!(r.best_loss, 7.5);
    for (v, (lo, hi)) in r.best_x.iter().zip(bounds) {
        assert!((lo..=hi).contains(v));
    }
}

#[test]
fn minimal_budget_is_pure_initialization() {
    let bounds = [(0.0, 1.0); 3];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = |x: &[f64]| x.iter().map(|v| (v - 0.5).abs()).sum::<f64>();
    let r = bayes_opt(f, &bounds, 4, 40, &mut rng).unwrap();
    assert_eq!(r.trace.len(), 4);
    let min = r.trace.iter().map(|e| e.loss).fold(f64::INFINITY, f64::min);
    assert_eq!(r.best_loss, min);
    // the same four points as a plain Latin hypercube from the same stream
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let lhs = latin_hypercube(&bounds, 4, &mut rng);
    for (e, p) in r.trace.iter().zip(&lhs) {
        assert_eq!(&e.x, p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    assert!(bayes_opt(f, &bounds, 3, 3, &mut rng).is_err());
}

#[test]
fn evaluations_stay_inside_bounds() {
    let bounds = [(-2.0, -1.0), (0.0, 0.1), (5.0, 50.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // minimum outside the box pulls acquisition against the walls
    let r = bayes_opt(|x| x[0] * 3.0 - x[1] + (x[2] - 80.0).powi(2), &bounds, 25, 8, &mut rng).unwrap();
    for e in &r.trace {
        for (v, (lo, hi)) in e.x.iter().zip(bounds) {
            assert!(*v >= lo && *v <= hi, "{v} outside [{lo}, {hi}]");
        }
    }
}

#[test]
fn non_finite_objective_values_are_penalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let r = bayes_opt(|x| if x[0] < 0.5 { f64::NAN } else { x[0] }, &[(0.0, 1.0)], 10, 5, &mut rng).unwrap();
    assert!(r.best_loss.is_finite());
    assert!(r.best_x[0] >= 0.5);
}

#[test]
fn eight_dimensional_hypercube_is_stratified() {
    let bounds = Bounds::default().as_pairs();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let pts = latin_hypercube(&bounds, 20, &mut rng);
    assert_eq!(pts.len(), 20);
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        let mut col: Vec<f64> = pts.iter().map(|p| p[j]).collect();
        col.sort_by(f64::total_cmp);
        for (k, v) in col.iter().enumerate() {
            let stratum = ((v - lo) / (hi - lo) * 20.0).floor().min(19.0) as usize;
            assert_eq!(stratum, k, "dimension {j}");
        }
    }
}

fn small_split() -> Vec<TrainingItem> {
    let ds = synth_generate(&SynthConfig {
        n: 40,
        seed: 3,
        ..Default::default()
    })
    .unwrap()
    .dataset;
    let plan = make_splits(&ds, 1, 0.2, 0).unwrap();
    training_items(&ds, &plan.splits[0], 2, 5.0).unwrap()
}

fn small_config(schedule: FitSchedule) -> FitConfig {
    FitConfig {
        schedule,
        n_init: 9,
        n_acquisition: 4,
        n_p: 10,
        seed: 11,
        ..Default::default()
    }
}

#[test]
fn fit_improves_on_initialization_and_default() {
    let items = small_split();
    let cfg = small_config(FitSchedule::Single);
    let r = fit(&items, &cfg).unwrap();
    assert_eq!(r.trace.len(), 13);
    let best_init = r.trace[..9].iter().map(|e| e.loss).fold(f64::INFINITY, f64::min);
    assert!(r.loss <= best_init);
    let min = r.trace.iter().map(|e| e.loss).fold(f64::INFINITY, f64::min);
    assert_eq!(r.loss, min);
    assert!(r.params.validate(&cfg.bounds).is_ok());
    // best loss is reproducible from the returned parameters
    assert_eq!(evaluate_loss(&items, &r.params, &cfg).unwrap(), r.loss);
    let default = evaluate_loss(&items, &ModelParams::default(), &cfg).unwrap();
    assert!(r.loss <= default, "fitted {} vs default {default}", r.loss);
    for w in r.incumbent_curve().windows(2) {
        assert!(w[1] <= w[0]);
    }
}

#[test]
fn unit_shrink_keeps_the_original_bounds() {
    let items = small_split();
    let cfg = FitConfig {
        shrink: 1.0,
        ..small_config(FitSchedule::TwoStage)
    };
    let r = fit(&items, &cfg).unwrap();
    assert_eq!(r.stage_bounds.len(), 2);
    assert_eq!(r.stage_bounds[1], cfg.bounds);
    assert_eq!(r.trace.len(), 26);
    assert!(r.trace.iter().filter(|e| e.stage == 2).count() == 13);
}

#[test]
fn fit_is_reproducible() {
    let items = small_split();
    let cfg = small_config(FitSchedule::Single);
    assert_eq!(fit(&items, &cfg).unwrap(), fit(&items, &cfg).unwrap());
}
