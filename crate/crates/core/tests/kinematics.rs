mod support;

use cogap::model::plan::PlanContext;
use cogap::model::{generate_trajectory, ActionSet, Behavior, ControlScheme, InteractionMode, Kinematics, SimConfig};
use cogap::scenario::ProjectedState;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::euler::{integrate, State};

struct Case {
    scheme: ControlScheme,
    kin: Kinematics,
    free_speed: f64,
    u: f64,
    behavior: Behavior,
    other: ProjectedState,
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let scheme = if rng.random_bool(0.5) {
        ControlScheme::Acceleration
    } else {
        ControlScheme::Jerk
    };
    let actions = ActionSet::default_for(scheme);
    let u = actions.values()[rng.random_range(0..actions.len())];
    Case {
        scheme,
        kin: Kinematics {
            d: rng.random_range(-5.0..80.0),
            v: rng.random_range(0.0..20.0),
            a: if scheme == ControlScheme::Jerk {
                rng.random_range(-4.0..4.0)
            } else {
                0.0
            },
        },
        free_speed: rng.random_range(5.0..15.0),
        u,
        behavior: if rng.random_bool(0.5) {
            Behavior::PassFirst
        } else {
            Behavior::PassSecond
        },
        other: ProjectedState::new(rng.random_range(-10.0..80.0), rng.random_range(0.0..20.0)),
    }
}

/// Largest gap between the closed-form plan and the stepped oracle.
fn oracle_error(c: &Case) -> (f64, f64) {
    let cfg = SimConfig::with(InteractionMode::NonInteractive, c.scheme);
    let ctx = PlanContext::from_config(&cfg, 4.0);
    let plan = generate_trajectory(c.kin, c.free_speed, c.u, c.behavior, c.other, &ctx);
    let start = State {
        d: c.kin.d,
        v: c.kin.v,
        a: c.kin.a,
    };
    let mut worst: f64 = 0.0;
    let mut t_end = 0.0;
    integrate(start, &plan.legs, &mut |t, s| {
        worst = worst.max((plan.trajectory.d_at(t) - s.d).abs());
        t_end = t;
    });
    (worst, t_end)
}

#[test]
fn closed_form_matches_stepped_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let c = random_case(&mut rng);
        let (err, t_end) = oracle_error(&c);
        assert!((t_end - 10.0).abs() < 1e-9, "plan covers {t_end} s");
        worst = worst.max(err);
    }
    assert!(worst < 1e-6, "largest deviation {worst} m");
}

#[test]
fn first_crossing_matches_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..500 {
        let c = random_case(&mut rng);
        let cfg = SimConfig::with(InteractionMode::NonInteractive, c.scheme);
        let ctx = PlanContext::from_config(&cfg, 4.0);
        let tr = generate_trajectory(c.kin, c.free_speed, c.u, c.behavior, c.other, &ctx).trajectory;
        let level = rng.random_range(-4.0..0.0);
        let got = tr.crossing(level);
        let (lo, hi) = (tr.start(), tr.end());
        if tr.d_at(hi) > level {
            assert!(got.is_none());
            continue;
        }
        // d is non-increasing, so the first crossing brackets cleanly
        let (mut a, mut b) = (lo, hi);
        if tr.d_at(a) <= level {
            b = a;
        }
        while b - a > 1e-12 {
            let m = 0.5 * (a + b);
            if tr.d_at(m) <= level {
                b = m;
            } else {
                a = m;
            }
        }
        let got = got.expect("reaches the level");
        assert!((got - b).abs() < 1e-9, "root {got}, bisection {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn plans_are_continuous_and_never_reverse(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_case(&mut rng);
        let cfg = SimConfig::with(InteractionMode::NonInteractive, c.scheme);
        let ctx = PlanContext::from_config(&cfg, 4.0);
        let plan = generate_trajectory(c.kin, c.free_speed, c.u, c.behavior, c.other, &ctx);
        let segs = &plan.trajectory.segments;
        prop_assert!(!segs.is_empty());
        prop_assert_eq!(segs[0].t0, 0.0);
        prop_assert_eq!(segs[0].d0, c.kin.d);
        for w in segs.windows(2) {
            prop_assert!((w[0].end() - w[1].t0).abs() < 1e-9);
            prop_assert!((w[0].d_end() - w[1].d0).abs() < 1e-9);
        }
        for s in segs {
            for k in 0..=8 {
                let tau = s.duration * f64::from(k) / 8.0;
                prop_assert!(s.v_at(tau) > -1e-9, "speed {}", s.v_at(tau));
            }
        }
        prop_assert!(plan.summary.effort >= 0.0);
    }

    #[test]
    fn stepped_oracle_agrees_on_random_plans(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (err, _) = oracle_error(&random_case(&mut rng));
        prop_assert!(err < 1e-6, "deviation {}", err);
    }
}
