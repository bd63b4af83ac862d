//! Noisy perception of the other agent through a constant-velocity Kalman
//! filter on its projected `(d, v)` state.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::ProjectedState;

/// Gaussian belief about the other agent's `(d, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub mean: ProjectedState,
    /// Row-major 2×2 covariance of `(d, v)`.
    pub cov: [[f64; 2]; 2],
}

impl BeliefState {
    pub fn new(mean: ProjectedState, var_d: f64, var_v: f64) -> Self {
        Self {
            mean,
            cov: [[var_d, 0.0], [0.0, var_v]],
        }
    }

    /// Initial belief around an observed state.
    pub fn initial(observed: ProjectedState, sigma_obs: f64) -> Self {
        Self::new(observed, (sigma_obs * sigma_obs).max(1e-4), 1.0)
    }

    pub fn is_psd(&self) -> bool {
        let [[a, b], [c, d]] = self.cov;
        a >= 0.0 && d >= 0.0 && (b - c).abs() <= 1e-12 * (1.0 + b.abs()) && a * d - b * c >= -1e-12
    }
}

/// One predict/update cycle. The observation is the other's true position
/// plus Gaussian noise of standard deviation `sigma_obs`; `process_noise` is
/// the white-acceleration intensity of the motion model.
pub fn perceive<R: Rng + ?Sized>(
    true_other: ProjectedState,
    belief: &BeliefState,
    sigma_obs: f64,
    process_noise: f64,
    dt: f64,
    rng: &mut R,
) -> Result<BeliefState> {
    if !(true_other.d.is_finite() && true_other.v.is_finite()) {
        return Err(Error::NonFinite("true state of the other agent"));
    }
    if !(belief.mean.d.is_finite() && belief.mean.v.is_finite()) {
        return Err(Error::NonFinite("belief mean"));
    }
    if !(dt > 0.0 && dt.is_finite()) || !(sigma_obs >= 0.0 && sigma_obs.is_finite()) {
        return Err(Error::NonFinite("dt and sigma_obs must be finite and non-negative"));
    }
    let noise: f64 = if sigma_obs > 0.0 {
        rng.sample::<f64, _>(StandardNormal) * sigma_obs
    } else {
        0.0
    };
    Ok(filter_step(belief, true_other.d + noise, sigma_obs, process_noise, dt))
}

/// Kalman predict + update with a given observation of `d`.
#[inline]
pub(crate) fn filter_step(
    belief: &BeliefState,
    z: f64,
    sigma_obs: f64,
    process_noise: f64,
    dt: f64,
) -> BeliefState {
    // x' = F x with F = [[1, -dt], [0, 1]] since d decreases at speed v
    let [[p00, p01], [p10, p11]] = belief.cov;
    let d = belief.mean.d - dt * belief.mean.v;
    let v = belief.mean.v;
    let q = process_noise * process_noise;
    let (dt2, dt3, dt4) = (dt * dt, dt * dt * dt, dt * dt * dt * dt);
    let pp00 = p00 - dt * (p01 + p10) + dt2 * p11 + q * dt4 / 4.0;
    let pp01 = p01 - dt * p11 - q * dt3 / 2.0;
    let pp11 = p11 + q * dt2;
    let s = pp00 + sigma_obs * sigma_obs;
    if s <= 0.0 {
        return BeliefState {
            mean: ProjectedState::new(d, v),
            cov: [[pp00, pp01], [pp01, pp11]],
        };
    }
    let k0 = pp00 / s;
    let k1 = pp01 / s;
    let innov = z - d;
    // Joseph-free form, symmetrised
    let c00 = (1.0 - k0) * pp00;
    let c01 = (1.0 - k0) * pp01;
    let c11 = pp11 - k1 * pp01;
    BeliefState {
        mean: ProjectedState::new(d + k0 * innov, v + k1 * innov),
        cov: [[c00.max(0.0), c01], [c01, c11.max(0.0)]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_observation_pins_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let truth = ProjectedState::new(20.0, 5.0);
        let prior = BeliefState::new(ProjectedState::new(20.5, 5.0), 1.0, 1.0);
        let post = perceive(truth, &prior, 0.0, 1.0, 0.1, &mut rng).unwrap();
        assert!((post.mean.d - 20.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_variance_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let truth = ProjectedState::new(10.0, 0.0);
        let mut b = BeliefState::new(truth, 4.0, 0.01);
        let mut last = b.cov[0][0];
        for _ in 0..20 {
            b = perceive(truth, &b, 1.0, 0.0, 0.1, &mut rng).unwrap();
            assert!(b.cov[0][0] < last);
            assert!(b.is_psd());
            last = b.cov[0][0];
        }
    }

    #[test]
    fn non_finite_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = BeliefState::new(ProjectedState::new(1.0, 1.0), 1.0, 1.0);
        assert!(perceive(ProjectedState::new(f64::NAN, 1.0), &b, 1.0, 1.0, 0.1, &mut rng).is_err());
        assert!(perceive(ProjectedState::new(1.0, 1.0), &b, 1.0, 1.0, 0.0, &mut rng).is_err());
    }
}
