//! Bayesian optimization: Latin-hypercube start, then expected-improvement
//! steps on a Gaussian-process surrogate.

use log::warn;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::gp::{expected_improvement, GaussianProcess};
use super::lhs::latin_hypercube;
use crate::error::{Error, Result};

/// Loss assigned to non-finite objective values.
pub const NON_FINITE_PENALTY: f64 = 1e12;

const RANDOM_CANDIDATES: usize = 2000;
const LOCAL_CANDIDATES: usize = 100;
const LOCAL_STARTS: usize = 5;
const POLISH_STEPS: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub x: Vec<f64>,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoResult {
    pub best_x: Vec<f64>,
    pub best_loss: f64,
    /// Every evaluation in order.
    pub trace: Vec<Evaluation>,
}

fn from_unit(u: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    u.iter()
        .zip(bounds)
        .map(|(&v, &(lo, hi))| (lo + v * (hi - lo)).clamp(lo, hi))
        .collect()
}

/// Minimizes `objective` over the box `bounds` with `budget` evaluations,
/// the first `min(n_init, budget)` of which form a Latin hypercube.
pub fn bayes_opt<R: Rng + ?Sized>(
    mut objective: impl FnMut(&[f64]) -> f64,
    bounds: &[(f64, f64)],
    budget: usize,
    n_init: usize,
    rng: &mut R,
) -> Result<BoResult> {
    let dim = bounds.len();
    if dim == 0 {
        return Err(Error::InvalidConfig("empty search space".into()));
    }
    if bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(Error::InvalidConfig("bounds must be finite with lo <= hi".into()));
    }
    if budget < dim + 1 {
        return Err(Error::InvalidConfig(format!(
            "budget {budget} below dimension + 1 = {}",
            dim + 1
        )));
    }
    let n_init = n_init.clamp(1, budget);
    let mut trace = Vec::with_capacity(budget);
    let mut units: Vec<Vec<f64>> = Vec::with_capacity(budget);
    let mut eval = |u: Vec<f64>, trace: &mut Vec<Evaluation>, units: &mut Vec<Vec<f64>>| {
        let x = from_unit(&u, bounds);
        let mut loss = objective(&x);
        if !loss.is_finite() {
            warn!("non-finite objective at {x:?}, using penalty");
            loss = NON_FINITE_PENALTY;
        }
        trace.push(Evaluation { x, loss });
        units.push(u);
    };
    let unit_box = vec![(0.0, 1.0); dim];
    for u in latin_hypercube(&unit_box, n_init, rng) {
        eval(u, &mut trace, &mut units);
    }
    while trace.len() < budget {
        let ys: Vec<f64> = trace.iter().map(|e| e.loss).collect();
        let next = match GaussianProcess::fit(&units, &ys) {
            Some(gp) => propose(&gp, &units, &ys, rng),
            None => {
                warn!("surrogate fit failed, sampling at random");
                (0..dim).map(|_| rng.random::<f64>()).collect()
            }
        };
        eval(next, &mut trace, &mut units);
    }
    let best = trace
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.loss.total_cmp(&b.1.loss).then(a.0.cmp(&b.0)))
        .map(|(_, e)| e.clone())
        .expect("budget is positive");
    Ok(BoResult {
        best_x: best.x,
        best_loss: best.loss,
        trace,
    })
}

/// Expected-improvement maximizer by random multistart and local polishing.
fn propose<R: Rng + ?Sized>(
    gp: &GaussianProcess,
    units: &[Vec<f64>],
    ys: &[f64],
    rng: &mut R,
) -> Vec<f64> {
    let dim = units[0].len();
    let best_y = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let score = |u: &[f64]| {
        let (m, s) = gp.predict(u);
        expected_improvement(m, s, best_y)
    };
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::with_capacity(RANDOM_CANDIDATES + LOCAL_CANDIDATES * LOCAL_STARTS);
    for _ in 0..RANDOM_CANDIDATES {
        let u: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        candidates.push((score(&u), u));
    }
    // perturbations of the best observed points
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&a, &b| ys[a].total_cmp(&ys[b]).then(a.cmp(&b)));
    for &i in order.iter().take(LOCAL_STARTS) {
        for k in 0..LOCAL_CANDIDATES {
            let scale = 0.2 / (1.0 + k as f64 / 10.0);
            let u = jitter(&units[i], scale, rng);
            candidates.push((score(&u), u));
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = candidates.swap_remove(0);
    for (mut s, mut u) in candidates.into_iter().take(LOCAL_STARTS - 1).chain(std::iter::once(best.clone())) {
        let mut step = 0.05;
        for _ in 0..POLISH_STEPS {
            let v = jitter(&u, step, rng);
            let sv = score(&v);
            if sv > s {
                s = sv;
                u = v;
            } else {
                step *= 0.9;
            }
        }
        if s > best.0 {
            best = (s, u);
        }
    }
    let mut u = best.1;
    // re-evaluating an existing point teaches the surrogate nothing
    if units.iter().any(|x| x.iter().zip(&u).all(|(a, b)| (a - b).abs() < 1e-9)) {
        u = (0..dim).map(|_| rng.random::<f64>()).collect();
    }
    u
}

fn jitter<R: Rng + ?Sized>(u: &[f64], scale: f64, rng: &mut R) -> Vec<f64> {
    u.iter()
        .map(|&v| (v + scale * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn finds_a_quadratic_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = bayes_opt(|x| (x[0] - 0.3).powi(2), &[(0.0, 1.0)], 30, 10, &mut rng).unwrap();
        assert!((r.best_x[0] - 0.3).abs() < 0.05);
        assert_eq!(r.trace.len(), 30);
    }

    #[test]
    fn pure_initialization_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = bayes_opt(|x| x[0] + x[1], &[(0.0, 1.0), (0.0, 2.0)], 3, 40, &mut rng).unwrap();
        assert_eq!(r.trace.len(), 3);
        let min = r.trace.iter().map(|e| e.loss).fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_loss, min);
    }

    #[test]
    fn constant_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = bayes_opt(|_| 7.0, &[(1.0, 2.0); 3], 12, 5, &mut rng).unwrap();
        assert_eq!(r.best_loss, 7.0);
        assert!(r.best_x.iter().all(|v| (1.0..=2.0).contains(v)));
    }

    #[test]
    fn rejects_small_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(bayes_opt(|_| 0.0, &[(0.0, 1.0); 3], 3, 3, &mut rng).is_err());
    }

    #[test]
    fn non_finite_objective_is_penalised() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = bayes_opt(|x| if x[0] > 0.5 { f64::NAN } else { x[0] }, &[(0.0, 1.0)], 6, 6, &mut rng).unwrap();
        assert!(r.trace.iter().all(|e| e.loss.is_finite()));
        assert!(r.best_x[0] <= 0.5);
    }
}
