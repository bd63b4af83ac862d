//! Latin-hypercube designs.

use rand::seq::SliceRandom;
use rand::Rng;

/// `n` points in the box `bounds`, one per stratum in every dimension.
pub fn latin_hypercube<R: Rng + ?Sized>(bounds: &[(f64, f64)], n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; bounds.len()]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        strata.shuffle(rng);
        for (point, &k) in points.iter_mut().zip(&strata) {
            let u: f64 = rng.random();
            let x = lo + (k as f64 + u) / n as f64 * (hi - lo);
            // guard the closed upper end against rounding
            point[j] = x.clamp(lo, hi);
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_point_per_stratum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = latin_hypercube(&[(0.0, 1.0)], 10, &mut rng);
        let mut bins: Vec<usize> = pts.iter().map(|p| (p[0] * 10.0).floor() as usize).collect();
        bins.sort_unstable();
        assert_eq!(bins, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn single_point_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = latin_hypercube(&[(-2.0, 5.0), (1.0, 1.5)], 1, &mut rng);
        assert_eq!(pts.len(), 1);
        assert!((-2.0..=5.0).contains(&pts[0][0]) && (1.0..=1.5).contains(&pts[0][1]));
    }
}
