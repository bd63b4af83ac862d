//! Gaussian-process regression on the unit cube with a Matérn 5/2 kernel.
//!
//! Hyperparameters (one length scale, a noise ratio) are picked from a small
//! grid by profile marginal likelihood; the signal variance is profiled out.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

const LENGTH_SCALES: [f64; 8] = [0.08, 0.12, 0.18, 0.25, 0.35, 0.5, 0.75, 1.1];
const NOISE_RATIOS: [f64; 4] = [1e-6, 1e-4, 1e-3, 1e-2];

#[inline]
fn matern52(r: f64) -> f64 {
    let s = 5f64.sqrt() * r;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Fitted surrogate. Inputs live in `[0, 1]^d`; outputs are standardized
/// internally and predictions are returned on the original scale.
pub struct GaussianProcess {
    x: Vec<Vec<f64>>,
    length_scale: f64,
    signal_var: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    y_mean: f64,
    y_scale: f64,
}

fn correlation(x: &[Vec<f64>], ls: f64, noise: f64) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0 + noise
        } else {
            matern52(dist(&x[i], &x[j]) / ls)
        }
    })
}

#[inline]
fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

impl GaussianProcess {
    /// `None` when no hyperparameter setting gives a positive-definite system.
    pub fn fit(x: &[Vec<f64>], y: &[f64]) -> Option<Self> {
        let n = y.len();
        if n == 0 || x.len() != n {
            return None;
        }
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let sd = (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        let y_scale = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
        let ys = DVector::from_iterator(n, y.iter().map(|v| (v - y_mean) / y_scale));
        let mut best: Option<(f64, f64, f64, Cholesky<f64, Dyn>, DVector<f64>)> = None;
        for &ls in &LENGTH_SCALES {
            for &noise in &NOISE_RATIOS {
                let Some(chol) = Cholesky::new(correlation(x, ls, noise)) else {
                    continue;
                };
                let alpha = chol.solve(&ys);
                let quad = ys.dot(&alpha).max(1e-300);
                let sigma2 = quad / n as f64;
                let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
                let lml = -0.5 * n as f64 * sigma2.ln() - 0.5 * log_det;
                if !lml.is_finite() {
                    continue;
                }
                if best.as_ref().is_none_or(|b| lml > b.0) {
                    best = Some((lml, ls, sigma2, chol, alpha));
                }
            }
        }
        let (_, length_scale, signal_var, chol, alpha) = best?;
        Some(Self {
            x: x.to_vec(),
            length_scale,
            signal_var,
            chol,
            alpha,
            y_mean,
            y_scale,
        })
    }

    /// Posterior mean and standard deviation at `p`, original scale.
    pub fn predict(&self, p: &[f64]) -> (f64, f64) {
        let k = DVector::from_iterator(
            self.x.len(),
            self.x.iter().map(|xi| matern52(dist(xi, p) / self.length_scale)),
        );
        let mean = k.dot(&self.alpha);
        // only the lower triangle of the dirty factor is read
        let v = self.chol.l_dirty().solve_lower_triangular(&k).unwrap_or_else(|| k.clone());
        let var = (1.0 - v.norm_squared()).max(0.0) * self.signal_var;
        (
            self.y_mean + self.y_scale * mean,
            self.y_scale * var.sqrt(),
        )
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }
}

/// Expected improvement below `best` for a minimization problem.
pub fn expected_improvement(mean: f64, sd: f64, best: f64) -> f64 {
    let imp = best - mean;
    if sd <= 1e-12 {
        return imp.max(0.0);
    }
    let z = imp / sd;
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let cdf = 0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2);
    imp * cdf + sd * pdf
}
