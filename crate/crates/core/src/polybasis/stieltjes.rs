use super::{composite_gauss_legendre, BasisError, Family, OrthonormalBasis, MAX_DEGREE};
use crate::randinputs::Marginal;

/// Tail mass cut from each unbounded end of the support.
const TAIL_MASS: f64 = 1e-30;
const POINTS_PER_PANEL: usize = 20;
const MAX_PANELS: usize = 4096;
const TOL: f64 = 1e-10;
const GRAM_TOL: f64 = 1e-6;

/// Recurrence coefficients by the discretized Stieltjes procedure on a
/// discrete measure with nodes `x` and weights `w`.
fn discrete_stieltjes(x: &[f64], w: &[f64], count: usize) -> (Vec<f64>, Vec<f64>) {
    let mass: f64 = w.iter().sum();
    let w: Vec<f64> = w.iter().map(|v| v / mass).collect();
    let mut prev = vec![0.0; x.len()];
    let mut cur = vec![1.0; x.len()];
    let mut d = Vec::with_capacity(count);
    let mut b = Vec::with_capacity(count);
    let mut norm_prev = 1.0;
    for k in 0..count {
        let norm: f64 = w.iter().zip(&cur).map(|(w, p)| w * p * p).sum();
        let xnorm: f64 = w.iter().zip(&cur).zip(x).map(|((w, p), x)| w * x * p * p).sum();
        let dk = xnorm / norm;
        let bk = if k == 0 { 1.0 } else { norm / norm_prev };
        d.push(dk);
        b.push(bk);
        let next: Vec<f64> = (0..x.len())
            .map(|j| (x[j] - dk) * cur[j] - bk * prev[j])
            .collect();
        prev = std::mem::replace(&mut cur, next);
        norm_prev = norm;
    }
    (d, b)
}

fn integration_range(marginal: &Marginal) -> (f64, f64) {
    let (lo, hi) = marginal.support();
    let lo = if lo.is_finite() { lo } else { marginal.quantile(TAIL_MASS) };
    let hi = if hi.is_finite() { hi } else { marginal.quantile_upper(TAIL_MASS) };
    (lo, hi)
}

/// Exponent of the grading map used on half-line supports, which smooths
/// power-law behaviour of the density at the finite endpoint.
const GRADING: f64 = 4.0;

fn discretize(marginal: &Marginal, lo: f64, hi: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (s_lo, s_hi) = marginal.support();
    let graded = s_lo.is_finite() && !s_hi.is_finite();
    if !graded {
        let rule = composite_gauss_legendre(lo, hi, panels, POINTS_PER_PANEL);
        let w = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(x, w)| w * marginal.pdf(*x))
            .collect();
        return (rule.nodes, w);
    }
    // x = lo + (hi − lo)·τ^GRADING, τ ∈ [0, 1]
    let rule = composite_gauss_legendre(0.0, 1.0, panels, POINTS_PER_PANEL);
    let len = hi - lo;
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| {
            let x = lo + len * t.powf(GRADING);
            let jac = GRADING * len * t.powf(GRADING - 1.0);
            (x, w * jac * marginal.pdf(x))
        })
        .unzip()
}

/// Orthonormal basis of degree `p` for the standard form of `marginal`,
/// built numerically from its density.
pub fn stieltjes_basis(marginal: &Marginal, p: usize) -> Result<OrthonormalBasis, BasisError> {
    if p > MAX_DEGREE {
        return Err(BasisError::DegreeTooHigh(p));
    }
    let std = marginal.standard();
    let (lo, hi) = integration_range(&std);
    let mut panels = 8;
    let (x, w) = discretize(&std, lo, hi, panels);
    let (mut d, mut b) = discrete_stieltjes(&x, &w, p + 1);
    loop {
        panels *= 2;
        if panels > MAX_PANELS {
            return Err(BasisError::QuadratureNotConverged { panels: panels / 2 });
        }
        let (x, w) = discretize(&std, lo, hi, panels);
        let (d2, b2) = discrete_stieltjes(&x, &w, p + 1);
        let change = d
            .iter()
            .zip(&d2)
            .chain(b.iter().zip(&b2))
            .map(|(u, v)| (u - v).abs() / (1.0 + v.abs()))
            .fold(0.0, f64::max);
        d = d2;
        b = b2;
        if change < TOL {
            let basis = OrthonormalBasis {
                family: Family::Numeric,
                marginal: std,
                d,
                b,
            };
            let residual = gram_residual(&basis, &x, &w);
            if residual > GRAM_TOL {
                return Err(BasisError::LossOfOrthogonality(residual));
            }
            return Ok(basis);
        }
    }
}

fn gram_residual(basis: &OrthonormalBasis, x: &[f64], w: &[f64]) -> f64 {
    let n = basis.degree() + 1;
    let mass: f64 = w.iter().sum();
    let mut g = vec![0.0; n * n];
    let mut v = vec![0.0; n];
    for (xi, wi) in x.iter().zip(w) {
        basis.eval_into(*xi, &mut v);
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] += wi / mass * v[i] * v[j];
            }
        }
    }
    (0..n * n)
        .map(|k| (g[k] - if k / n == k % n { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polybasis::classical_basis;

    fn same_coefficients(a: &OrthonormalBasis, b: &OrthonormalBasis, tol: f64) {
        let (ca, cb) = (a.monomial_coefficients(), b.monomial_coefficients());
        for k in 0..ca.len() {
            for j in 0..ca.len() {
                assert!((ca[k][j] - cb[k][j]).abs() < tol, "{k},{j}: {} vs {}", ca[k][j], cb[k][j]);
            }
        }
    }

    #[test]
    fn normal_reproduces_hermite() {
        let m = Marginal::Normal { mu: 0.0, sigma: 1.0 };
        let num = stieltjes_basis(&m, 5).unwrap();
        for dk in &num.d {
            assert!(dk.abs() < 1e-12);
        }
        same_coefficients(&num, &classical_basis(&m, 5).unwrap(), 1e-8);
    }

    #[test]
    fn uniform_reproduces_legendre() {
        let m = Marginal::Uniform { lo: -1.0, hi: 1.0 };
        same_coefficients(&stieltjes_basis(&m, 4).unwrap(), &classical_basis(&m, 4).unwrap(), 1e-8);
    }

    #[test]
    fn weibull_first_coefficient_is_mean() {
        let m = Marginal::Weibull { k: 2.0, c: 1.0 };
        let basis = stieltjes_basis(&m, 3).unwrap();
        assert!((basis.d[0] - m.mean()).abs() < 1e-12);
        assert!((basis.b[1] - m.variance()).abs() < 1e-12);
    }
}
