use cogap::metrics::{auc, paired_t_test, roc_points, tnr_pr, trapezoid, BinaryEval, EvalTime};
use proptest::prelude::*;

fn eval(labels: Vec<bool>, scores: Vec<f64>) -> BinaryEval {
    BinaryEval::new(EvalTime::GapOpening, labels, scores).unwrap()
}

/// Wins and ties over every positive-negative pair, as `(2·wins + ties, 2·n_p·n_n)`.
fn brute_force_auc(labels: &[bool], scores: &[f64]) -> (u64, u64) {
    let mut twice = 0;
    let mut pairs = 0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 2;
            if scores[i] > scores[j] {
                twice += 2;
            } else if scores[i] == scores[j] {
                twice += 1;
            }
        }
    }
    (twice, pairs)
}

/// Best true-negative rate over every threshold that keeps all positives,
/// with `score >= threshold` predicted positive.
fn exhaustive_tnr_pr(labels: &[bool], scores: &[f64]) -> f64 {
    let n_neg = labels.iter().filter(|&&l| !l).count();
    let mut candidates: Vec<f64> = scores.to_vec();
    candidates.push(f64::NEG_INFINITY);
    candidates.push(f64::INFINITY);
    let mut best: f64 = 0.0;
    for &th in &candidates {
        let recall_ok = labels.iter().zip(scores).all(|(&l, &s)| !l || s >= th);
        if !recall_ok {
            continue;
        }
        let tn = labels.iter().zip(scores).filter(|(&l, &s)| !l && s < th).count();
        best = best.max(tn as f64 / n_neg as f64);
    }
    best
}

/// Scores on a coarse grid so that ties are common.
fn labelled() -> impl Strategy<Value = (Vec<bool>, Vec<f64>)> {
    prop::collection::vec((any::<bool>(), 0u8..20), 2..200)
        .prop_filter("both classes", |v| v.iter().any(|x| x.0) && v.iter().any(|x| !x.0))
        .prop_map(|v| (v.iter().map(|x| x.0).collect(), v.iter().map(|x| f64::from(x.1) / 16.0).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn auc_equals_pair_enumeration((labels, scores) in labelled()) {
        let (num, den) = brute_force_auc(&labels, &scores);
        prop_assert!(den <= 2 * 10_000);
        let got = auc(&eval(labels, scores)).unwrap();
        prop_assert_eq!(got, num as f64 / den as f64);
    }

    #[test]
    fn auc_ignores_monotone_transforms((labels, scores) in labelled()) {
        let base = auc(&eval(labels.clone(), scores.clone())).unwrap();
        let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        prop_assert_eq!(auc(&eval(labels.clone(), warped)).unwrap(), base);
        let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((auc(&eval(labels, flipped)).unwrap() - (1.0 - base)).abs() < 1e-12);
    }

    #[test]
    fn roc_area_is_the_auc((labels, scores) in labelled()) {
        let e = eval(labels, scores);
        let pts = roc_points(&e).unwrap();
        prop_assert_eq!(pts[0], (0.0, 0.0));
        prop_assert_eq!(*pts.last().unwrap(), (1.0, 1.0));
        prop_assert!((trapezoid(&pts) - auc(&e).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn tnr_pr_equals_threshold_search((labels, scores) in labelled()) {
        let want = exhaustive_tnr_pr(&labels, &scores);
        prop_assert_eq!(tnr_pr(&eval(labels, scores)).unwrap(), want);
    }

    #[test]
    fn t_test_is_antisymmetric(a in prop::collection::vec(0.0f64..1.0, 3..12), shift in -0.2f64..0.2) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x + shift + 0.01 * (i % 3) as f64).collect();
        let ab = paired_t_test(&a, &b, 0.05).unwrap();
        let ba = paired_t_test(&b, &a, 0.05).unwrap();
        prop_assert!((ab.t + ba.t).abs() < 1e-9);
        prop_assert!((ab.p - ba.p).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }
}

#[test]
fn hand_enumerated_fixtures() {
    // positives 0.9, 0.4 against negatives 0.6, 0.1: three of four pairs won
    let e = eval(vec![true, true, false, false], vec![0.9, 0.4, 0.6, 0.1]);
    assert_eq!(auc(&e).unwrap(), 0.75);
    // lowest positive 0.6 keeps 0.3 and 0.2 but not 0.7
    let e = eval(vec![true, true, false, false, false], vec![0.8, 0.6, 0.7, 0.3, 0.2]);
    assert_eq!(tnr_pr(&e).unwrap(), 2.0 / 3.0);
}

#[test]
fn paired_t_test_against_reference_values() {
    // an independent statistics package gives t = 2.7116307227332004,
    // p = 0.04219399670552446 for this pair
    let a = [0.9, 0.85, 0.7, 0.95, 0.8, 0.75];
    let b = [0.8, 0.86, 0.65, 0.9, 0.7, 0.74];
    let r = paired_t_test(&a, &b, 0.05).unwrap();
    assert!((r.t - 2.711_630_722_733_200_4).abs() < 1e-9);
    assert!((r.p - 0.042_193_996_705_524_46).abs() < 1e-9);
    assert!(r.significant);
    assert!(!paired_t_test(&a, &b, 0.01).unwrap().significant);
}
