use cogap::fitting::{loss_l1, loss_l2, variance_regularizer};
use cogap::prediction::{sample_variance, PredictionRecord, VARIANCE_CAP};
use cogap::scenario::Outcome;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(accepted: Vec<bool>, times: Vec<f64>) -> PredictionRecord {
    let raw = sample_variance(&times);
    PredictionRecord {
        a_pred: accepted.iter().filter(|&&a| a).count() as f64 / accepted.len() as f64,
        accepted,
        acceptance_times: times,
        raw_variance: raw,
        variance: raw.min(VARIANCE_CAP),
    }
}

fn random_truth(rng: &mut ChaCha8Rng) -> Outcome {
    let t_c = rng.random_range(0.5..8.0);
    if rng.random_bool(0.5) {
        Outcome {
            accepted: true,
            t_accept: Some(rng.random_range(0.1..t_c)),
            t_contested: t_c,
        }
    } else {
        Outcome {
            accepted: false,
            t_accept: None,
            t_contested: t_c,
        }
    }
}

/// Rollouts whose times spread around `center`; `tight` keeps the sample
/// variance below the cap.
fn random_record(rng: &mut ChaCha8Rng, center: f64, tight: bool) -> PredictionRecord {
    let n = rng.random_range(1..30);
    let spread = if tight { 0.05 } else { 2.0 };
    let times: Vec<f64> = (0..n).map(|_| center + rng.random_range(-spread..spread)).collect();
    let accepted = (0..n).map(|_| rng.random_bool(0.5)).collect();
    record(accepted, times)
}

/// The first loss written out term by term.
fn reference_l1(preds: &[PredictionRecord], truth: &[Outcome]) -> f64 {
    let mut total = 0.0;
    for (p, t) in preds.iter().zip(truth) {
        let a = if t.accepted { 1.0 } else { 0.0 };
        let t_ref = t.t_accept.unwrap_or(t.t_contested);
        let mut s = 0.0;
        for (&ap, &tp) in p.accepted.iter().zip(&p.acceptance_times) {
            let mut clipped = if tp > t.t_contested { tp } else { t.t_contested };
            if let Some(t_a) = t.t_accept {
                if clipped > t_a {
                    clipped = t_a;
                }
            }
            let ap = if ap { 1.0 } else { 0.0 };
            s += 4.0 * f64::abs(a - ap) + (t_ref - clipped) * (t_ref - clipped);
        }
        total += s / p.accepted.len() as f64;
    }
    total
}

#[test]
fn second_loss_bounds_the_first_on_random_fixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let n = rng.random_range(1..12);
        let truth: Vec<Outcome> = (0..n).map(|_| random_truth(&mut rng)).collect();
        let preds: Vec<PredictionRecord> = truth
            .iter()
            .map(|t| {
                let tight = rng.random_bool(0.3);
                random_record(&mut rng, t.t_contested, tight)
            })
            .collect();
        let l1 = loss_l1(&preds, &truth).unwrap();
        let l2 = loss_l2(&preds, &truth).unwrap();
        assert!((l1 - reference_l1(&preds, &truth)).abs() < 1e-9 * (1.0 + l1), "case {case}");
        assert!(l2 >= l1, "case {case}: {l2} < {l1}");
        let all_capped = preds.iter().all(|p| p.variance == VARIANCE_CAP);
        assert_eq!(l2 == l1, all_capped, "case {case}");
    }
}

#[test]
fn capped_variances_make_the_losses_equal() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let n = rng.random_range(1..8);
        let truth: Vec<Outcome> = (0..n).map(|_| random_truth(&mut rng)).collect();
        let preds: Vec<PredictionRecord> = truth
            .iter()
            .map(|t| {
                let mut p = random_record(&mut rng, t.t_contested, false);
                p.variance = VARIANCE_CAP;
                p
            })
            .collect();
        assert_eq!(loss_l1(&preds, &truth).unwrap(), loss_l2(&preds, &truth).unwrap());
    }
}

#[test]
fn accepted_before_contact_has_no_time_error() {
    // with t_A < t_C every prediction is clipped to t_A
    let truth = Outcome {
        accepted: true,
        t_accept: Some(1.5),
        t_contested: 3.0,
    };
    for t in [0.0, 1.0, 2.0, 3.0, 9.0] {
        let l = loss_l1(&[record(vec![true], vec![t])], &[truth]).unwrap();
        assert_eq!(l, 0.0, "t_pred {t}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn regularizer_is_a_square(v in 0.0f64..=0.01) {
        let sq = (10.0 * v.sqrt() - 1.0).powi(2);
        prop_assert!((variance_regularizer(v) - sq).abs() < 1e-12);
        prop_assert!(variance_regularizer(v) >= -1e-15);
    }

    #[test]
    fn losses_are_non_negative(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = vec![random_truth(&mut rng)];
        let preds = vec![random_record(&mut rng, truth[0].t_contested, false)];
        prop_assert!(loss_l1(&preds, &truth).unwrap() >= 0.0);
    }
}
