//! Dense least squares through the normal equations with a ridge fallback.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct LsqSolution {
    pub coef: DVector<f64>,
    /// The Gram matrix was singular or nearly so and a ridge term of
    /// 1e-10·trace was added.
    pub regularized: bool,
}

/// Smallest acceptable squared Cholesky pivot relative to the largest Gram
/// diagonal before falling back to ridge regression.
const PIVOT_RATIO: f64 = 1e-13;

/// Solve the symmetric positive semidefinite system `gram · x = rhs`.
pub fn solve_normal(gram: DMatrix<f64>, rhs: &DVector<f64>) -> LsqSolution {
    let k = gram.nrows();
    let max_diag = (0..k).map(|i| gram[(i, i)]).fold(0.0, f64::max);
    if max_diag > 0.0 {
        if let Some(chol) = gram.clone().cholesky() {
            let l = chol.l_dirty();
            let min_pivot = (0..k).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
            if min_pivot > PIVOT_RATIO * max_diag {
                return LsqSolution {
                    coef: chol.solve(rhs),
                    regularized: false,
                };
            }
        }
    }
    let trace: f64 = (0..k).map(|i| gram[(i, i)]).sum();
    let ridge = if trace > 0.0 { 1e-10 * trace } else { 1e-10 };
    let mut reg = gram;
    for i in 0..k {
        reg[(i, i)] += ridge;
    }
    let coef = match reg.clone().cholesky() {
        Some(chol) => chol.solve(rhs),
        None => reg
            .svd(true, true)
            .solve(rhs, 1e-14)
            .unwrap_or_else(|_| DVector::zeros(k)),
    };
    LsqSolution {
        coef,
        regularized: true,
    }
}

/// In-place Cholesky solve of a small dense system stored row-major in
/// `gram` (`k × k`, lower triangle read). On success `rhs` holds the
/// solution; returns `false` without a usable result when a pivot fails
/// the same test as [`solve_normal`].
pub fn cholesky_solve_in_place(gram: &mut [f64], rhs: &mut [f64], k: usize) -> bool {
    let max_diag = (0..k).map(|i| gram[i * k + i]).fold(0.0, f64::max);
    if !(max_diag > 0.0) {
        return false;
    }
    for j in 0..k {
        let mut d = gram[j * k + j];
        for p in 0..j {
            d -= gram[j * k + p] * gram[j * k + p];
        }
        if !(d > PIVOT_RATIO * max_diag) {
            return false;
        }
        let l = d.sqrt();
        gram[j * k + j] = l;
        for i in j + 1..k {
            let mut v = gram[i * k + j];
            for p in 0..j {
                v -= gram[i * k + p] * gram[j * k + p];
            }
            gram[i * k + j] = v / l;
        }
    }
    for i in 0..k {
        let mut v = rhs[i];
        for p in 0..i {
            v -= gram[i * k + p] * rhs[p];
        }
        rhs[i] = v / gram[i * k + i];
    }
    for i in (0..k).rev() {
        let mut v = rhs[i];
        for p in i + 1..k {
            v -= gram[p * k + i] * rhs[p];
        }
        rhs[i] = v / gram[i * k + i];
    }
    true
}

/// Ordinary least squares `min ‖A x − y‖`.
pub fn least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> LsqSolution {
    solve_normal(a.tr_mul(a), &a.tr_mul(y))
}
