use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng;

/// Latin hypercube sample of `m` points in `(0,1)^n`, one point per
/// stratum `[k/m, (k+1)/m)` in every column. Column `j` draws from its own
/// stream, so the result depends only on `(n, m, seed)`.
pub fn lhs_sample(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m, n);
    for j in 0..n {
        let mut r = rng::stream(seed, "lhs", j as u64);
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut r);
        for (i, &k) in perm.iter().enumerate() {
            let u: f64 = r.random();
            let hi = ((k + 1) as f64 / m as f64).next_down();
            out[(i, j)] = ((k as f64 + u) / m as f64).clamp(f64::MIN_POSITIVE, hi);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_point_per_quartile() {
        let s = lhs_sample(1, 4, 3);
        let mut v: Vec<f64> = s.column(0).iter().copied().collect();
        v.sort_by(f64::total_cmp);
        for (k, x) in v.iter().enumerate() {
            assert!(*x >= k as f64 / 4.0 && *x < (k + 1) as f64 / 4.0);
        }
    }

    #[test]
    fn seed_determinism() {
        assert_eq!(lhs_sample(3, 50, 11), lhs_sample(3, 50, 11));
        assert_ne!(lhs_sample(3, 50, 11), lhs_sample(3, 50, 12));
    }

    #[test]
    fn column_means_near_half() {
        let s = lhs_sample(2, 1000, 5);
        for j in 0..2 {
            assert!((s.column(j).mean() - 0.5).abs() < 1e-3);
        }
    }

    proptest! {
        #[test]
        fn stratification_holds(n in 1usize..5, m in 1usize..200, seed in any::<u64>()) {
            let s = lhs_sample(n, m, seed);
            for j in 0..n {
                let mut seen = vec![false; m];
                for i in 0..m {
                    let u = s[(i, j)];
                    prop_assert!(u > 0.0 && u < 1.0);
                    let k = (u * m as f64).floor() as usize;
                    prop_assert!(!seen[k]);
                    seen[k] = true;
                }
            }
        }
    }
}
