//! Valuing trajectory pairs and weighting the other agent's behaviors.

use super::plan::PlanSummary;
use super::{Behavior, ModelParams};

/// Settings of [`evaluate_value`] that are not fitted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValueContext {
    pub horizon: f64,
    pub collision_penalty: f64,
    /// The valuing agent must yield by rule (the target).
    pub lacks_priority: bool,
}

/// Both agents inside the contested space at the same time.
#[inline]
pub fn occupancy_overlaps(a: &PlanSummary, b: &PlanSummary, horizon: f64) -> bool {
    let (a_in, b_in) = (a.entry, b.entry);
    if a_in >= horizon || b_in >= horizon {
        return false;
    }
    let a_out = a.exit.min(horizon);
    let b_out = b.exit.min(horizon);
    a_in.max(b_in) < a_out.min(b_out)
}

/// Value of `own` given the other follows `other`: minus the weighted time
/// to clear the contested space, minus the weighted control effort, minus
/// the rule penalty when an agent without priority passes first, minus the
/// collision penalty for overlapping occupancy or an infeasible own plan.
#[inline]
pub fn evaluate_value(
    own: &PlanSummary,
    other: &PlanSummary,
    params: &ModelParams,
    ctx: &ValueContext,
) -> f64 {
    let clear = own.exit.min(ctx.horizon);
    let mut value = -params.w_time * clear - params.w_ctrl * own.effort;
    if ctx.lacks_priority && own.behavior == Behavior::PassFirst {
        value -= params.w_rule;
    }
    if !own.feasible || occupancy_overlaps(own, other, ctx.horizon) {
        value -= ctx.collision_penalty;
    }
    value
}

/// Probability of each of the other's behaviors (indexed by
/// [`Behavior::index`]): the best value per behavior over the other's
/// actions, passed through a softmax with inverse temperature `beta`.
///
/// `values[b][u]` is the value the other assigns to action `u` under
/// behavior `b`.
pub fn theory_of_mind_weights<V: AsRef<[f64]>>(values: &[V; 2], beta: f64) -> [f64; 2] {
    let best = |row: &[f64]| row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    softmax2(best(values[0].as_ref()), best(values[1].as_ref()), beta)
}

#[inline]
pub(crate) fn softmax2(v0: f64, v1: f64, beta: f64) -> [f64; 2] {
    // shifted by the max for stability
    let m = v0.max(v1);
    let e0 = (beta * (v0 - m)).exp();
    let e1 = (beta * (v1 - m)).exp();
    let z = e0 + e1;
    [e0 / z, e1 / z]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(behavior: Behavior, entry: f64, exit: f64, effort: f64) -> PlanSummary {
        PlanSummary {
            behavior,
            entry,
            exit,
            effort,
            feasible: true,
        }
    }

    fn ctx(lacks_priority: bool) -> ValueContext {
        ValueContext {
            horizon: 10.0,
            collision_penalty: 1e4,
            lacks_priority,
        }
    }

    #[test]
    fn vanishing_penalties() {
        let params = ModelParams {
            w_time: 0.0,
            ..ModelParams::default()
        };
        let own = summary(Behavior::PassFirst, 1.0, 2.0, 0.0);
        let other = summary(Behavior::PassSecond, 5.0, 6.0, 0.0);
        assert_eq!(evaluate_value(&own, &other, &params, &ctx(false)), 0.0);
    }

    #[test]
    fn overlap_is_dominated_by_collision_penalty() {
        let params = ModelParams::default();
        let own = summary(Behavior::PassFirst, 1.0, 3.0, 0.0);
        let other = summary(Behavior::PassFirst, 2.0, 4.0, 0.0);
        assert!(evaluate_value(&own, &other, &params, &ctx(true)) <= -1e4);
    }

    #[test]
    fn infeasible_plans_get_the_collision_penalty() {
        let params = ModelParams::default();
        let mut own = summary(Behavior::PassSecond, f64::INFINITY, f64::INFINITY, 0.0);
        let other = summary(Behavior::PassFirst, 2.0, 4.0, 0.0);
        let ok = evaluate_value(&own, &other, &params, &ctx(true));
        own.feasible = false;
        let bad = evaluate_value(&own, &other, &params, &ctx(true));
        assert_eq!(ok - bad, 1e4);
    }

    #[test]
    fn control_term_is_linear_in_effort() {
        let params = ModelParams {
            w_time: 0.0,
            w_rule: 0.0,
            ..ModelParams::default()
        };
        let other = summary(Behavior::PassSecond, 8.0, 9.0, 0.0);
        let v1 = evaluate_value(&summary(Behavior::PassFirst, 1.0, 2.0, 3.0), &other, &params, &ctx(false));
        let v2 = evaluate_value(&summary(Behavior::PassFirst, 1.0, 2.0, 6.0), &other, &params, &ctx(false));
        assert!((v2 - 2.0 * v1).abs() < 1e-12);
    }

    #[test]
    fn rule_penalty_only_without_priority() {
        let params = ModelParams {
            w_time: 0.0,
            w_ctrl: 0.0,
            w_rule: 2.5,
            ..ModelParams::default()
        };
        let own = summary(Behavior::PassFirst, 1.0, 2.0, 0.0);
        let other = summary(Behavior::PassSecond, 5.0, 6.0, 0.0);
        assert_eq!(evaluate_value(&own, &other, &params, &ctx(true)), -2.5);
        assert_eq!(evaluate_value(&own, &other, &params, &ctx(false)), 0.0);
    }

    #[test]
    fn softmax_cases() {
        let w = theory_of_mind_weights(&[[-2.0, -1.0], [-1.0, -5.0]], 1.0);
        assert_eq!(w, [0.5, 0.5]);
        let w = theory_of_mind_weights(&[[-1.0], [-3.0]], 1.0);
        let e1 = (-1.0f64).exp();
        let e3 = (-3.0f64).exp();
        assert!((w[0] - e1 / (e1 + e3)).abs() < 1e-15);
        assert!((w[0] - 0.8808).abs() < 1e-4 && (w[1] - 0.1192).abs() < 1e-4);
        let w = theory_of_mind_weights(&[[-1.0], [-1.5]], 1e4);
        assert!(w[0] > 1.0 - 1e-12);
    }
}
