//! Closed-form real roots of polynomials up to degree three.

/// Real roots of `c[0] + c[1] x + c[2] x² + c[3] x³`, ascending, with
/// multiplicities collapsed. Leading zero coefficients reduce the degree.
pub fn real_roots(c: [f64; 4]) -> Roots {
    let scale = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut out = Roots::default();
    if scale == 0.0 {
        return out;
    }
    let tiny = 1e-14 * scale;
    if c[3].abs() > tiny {
        cubic(c, &mut out);
    } else if c[2].abs() > tiny {
        quadratic(c[0], c[1], c[2], &mut out);
    } else if c[1].abs() > tiny {
        out.push(-c[0] / c[1]);
    }
    // one Newton step on each root tidies cancellation in the closed forms
    for r in out.as_mut_slice() {
        let (f, df) = eval_with_derivative(c, *r);
        if df != 0.0 {
            let step = f / df;
            if step.is_finite() && step.abs() <= 1e-6 * (1.0 + r.abs()) {
                *r -= step;
            }
        }
    }
    out.sort();
    out
}

pub fn eval(c: [f64; 4], x: f64) -> f64 {
    ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
}

fn eval_with_derivative(c: [f64; 4], x: f64) -> (f64, f64) {
    (eval(c, x), (3.0 * c[3] * x + 2.0 * c[2]) * x + c[1])
}

fn quadratic(c0: f64, c1: f64, c2: f64, out: &mut Roots) {
    let disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        // tangency lost to rounding
        if disc > -1e-12 * (c1 * c1).max(1e-300) {
            out.push(-c1 / (2.0 * c2));
        }
        return;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (c1 + c1.signum() * sq);
    if q == 0.0 {
        out.push(0.0);
        return;
    }
    out.push(q / c2);
    let other = c0 / q;
    out.push(other);
}

fn cubic(c: [f64; 4], out: &mut Roots) {
    let a = c[2] / c[3];
    let b = c[1] / c[3];
    let d = c[0] / c[3];
    // depressed: t³ + p t + q with x = t - a/3
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if p == 0.0 && q == 0.0 {
        out.push(-shift);
    } else if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-q / 2.0 + sq).cbrt();
        let v = (-q / 2.0 - sq).cbrt();
        out.push(u + v - shift);
    } else {
        // three real roots (trigonometric form)
        let r = (-p / 3.0).sqrt();
        let arg = if r == 0.0 {
            0.0
        } else {
            (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0)
        };
        let phi = arg.acos();
        for k in 0..3 {
            let ang = (phi + 2.0 * std::f64::consts::PI * k as f64) / 3.0;
            out.push(2.0 * r * ang.cos() - shift);
        }
    }
}

/// Up to three roots without allocating.
#[derive(Clone, Copy, Debug, Default)]
pub struct Roots {
    vals: [f64; 3],
    len: usize,
}

impl Roots {
    fn push(&mut self, v: f64) {
        if self.len < 3 {
            self.vals[self.len] = v;
            self.len += 1;
        }
    }

    fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.vals[..self.len]
    }

    fn sort(&mut self) {
        self.vals[..self.len].sort_by(f64::total_cmp);
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.vals[..self.len]
    }
}

/// Smallest root in `[lo, hi]` of a polynomial that is positive at `lo` and
/// non-positive at `hi`. Rounding can push the true crossing just outside the
/// interval; the root closest to it is then clamped in.
pub fn first_root_in(c: [f64; 4], lo: f64, hi: f64) -> f64 {
    let roots = real_roots(c);
    let slack = 1e-9 * (1.0 + hi.abs());
    let mut best: Option<f64> = None;
    for &r in roots.as_slice() {
        if r >= lo - slack && r <= hi + slack {
            best = Some(best.map_or(r, |b: f64| b.min(r)));
        }
    }
    let r = best.unwrap_or_else(|| {
        roots
            .as_slice()
            .iter()
            .copied()
            .min_by(|a, b| {
                let da = (a - a.clamp(lo, hi)).abs();
                let db = (b - b.clamp(lo, hi)).abs();
                da.total_cmp(&db)
            })
            .unwrap_or(hi)
    });
    r.clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(c: [f64; 4], expected: &[f64]) {
        let r = real_roots(c);
        assert_eq!(r.as_slice().len(), expected.len(), "{:?}", r.as_slice());
        for (a, b) in r.as_slice().iter().zip(expected) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn linear_and_quadratic() {
        check([-2.0, 1.0, 0.0, 0.0], &[2.0]);
        // (x-1)(x-3)
        check([3.0, -4.0, 1.0, 0.0], &[1.0, 3.0]);
        check([1.0, 0.0, 1.0, 0.0], &[]);
    }

    #[test]
    fn cubic_three_real() {
        // (x-1)(x-2)(x-3) = x³ - 6x² + 11x - 6
        check([-6.0, 11.0, -6.0, 1.0], &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn cubic_one_real() {
        // (x-2)(x²+1) = x³ - 2x² + x - 2
        check([-2.0, 1.0, -2.0, 1.0], &[2.0]);
    }

    #[test]
    fn first_root_picks_smallest_in_range() {
        let c = [-6.0, 11.0, -6.0, 1.0];
        assert!((first_root_in(c, 1.5, 5.0) - 2.0).abs() < 1e-12);
    }
}
