//! Univariate polynomial bases orthonormal with respect to an input
//! marginal, stored as three-term recurrence coefficients.
//!
//! With `φ_{-1} = 0` and `φ_0 = 1` the basis satisfies
//! `√b_{k+1} φ_{k+1}(x) = (x − d_k) φ_k(x) − √b_k φ_{k−1}(x)`.

mod quadrature;
mod stieltjes;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::randinputs::Marginal;

pub use quadrature::{composite_gauss_legendre, QuadratureRule};
pub use stieltjes::stieltjes_basis;

pub const MAX_DEGREE: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("no classical orthogonal family for {0}")]
    UnsupportedMarginal(String),
    #[error("degree {0} exceeds the supported maximum of {MAX_DEGREE}")]
    DegreeTooHigh(usize),
    #[error("recurrence quadrature did not converge after {panels} panels")]
    QuadratureNotConverged { panels: usize },
    #[error("numerical basis lost orthogonality (Gram residual {0:.3e})")]
    LossOfOrthogonality(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Family {
    Hermite,
    Legendre,
    /// Weight `(1 − x)^a (1 + x)^b` on [-1, 1].
    Jacobi { a: f64, b: f64 },
    Laguerre,
    /// Weight `x^a e^{−x}` on [0, ∞).
    GeneralizedLaguerre { a: f64 },
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalBasis {
    pub family: Family,
    /// Standard-space marginal the basis is orthonormal against.
    pub marginal: Marginal,
    /// `d_0 … d_p`.
    pub d: Vec<f64>,
    /// `b_0 … b_p` with `b_0 = 1` (total probability mass).
    pub b: Vec<f64>,
}

/// Recurrence coefficients `(d_k, b_k)` for `k = 0..count` of a classical
/// family, with `b_0 = 1`.
pub fn classical_recurrence(family: Family, count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = Vec::with_capacity(count);
    let mut b = Vec::with_capacity(count);
    for k in 0..count {
        let kf = k as f64;
        let (dk, bk) = match family {
            Family::Hermite => (0.0, kf),
            Family::Legendre => (0.0, kf * kf / (4.0 * kf * kf - 1.0)),
            Family::Laguerre => (2.0 * kf + 1.0, kf * kf),
            Family::GeneralizedLaguerre { a } => (2.0 * kf + a + 1.0, kf * (kf + a)),
            Family::Jacobi { a, b: bb } => jacobi_coefficients(k, a, bb),
            Family::Numeric => panic!("numeric bases have no closed-form recurrence"),
        };
        d.push(dk);
        b.push(if k == 0 { 1.0 } else { bk });
    }
    (d, b)
}

fn jacobi_coefficients(k: usize, a: f64, b: f64) -> (f64, f64) {
    let kf = k as f64;
    let s = 2.0 * kf + a + b;
    let d = if k == 0 {
        (b - a) / (a + b + 2.0)
    } else {
        (b * b - a * a) / (s * (s + 2.0))
    };
    let bk = match k {
        0 => 1.0,
        1 => 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + a + b).powi(2) * (3.0 + a + b)),
        _ => {
            4.0 * kf * (kf + a) * (kf + b) * (kf + a + b)
                / (s * s * (s + 1.0) * (s - 1.0))
        }
    };
    (d, bk)
}

/// Classical family matching a marginal's standard form.
pub fn family_for(marginal: &Marginal) -> Option<Family> {
    match *marginal {
        Marginal::Normal { .. } => Some(Family::Hermite),
        Marginal::Beta { alpha, beta, .. } => {
            // x = 2t − 1 turns t^{α−1}(1−t)^{β−1} into (1+x)^{α−1}(1−x)^{β−1}.
            Some(Family::Jacobi {
                a: beta - 1.0,
                b: alpha - 1.0,
            })
        }
        Marginal::Uniform { .. } => Some(Family::Legendre),
        Marginal::Exponential { .. } => Some(Family::Laguerre),
        Marginal::Gamma { shape, .. } => {
            if shape == 1.0 {
                Some(Family::Laguerre)
            } else {
                Some(Family::GeneralizedLaguerre { a: shape - 1.0 })
            }
        }
        Marginal::Weibull { .. } => None,
    }
}

/// Orthonormal classical basis of degree `p` for the standard form of
/// `marginal`.
pub fn classical_basis(marginal: &Marginal, p: usize) -> Result<OrthonormalBasis, BasisError> {
    if p > MAX_DEGREE {
        return Err(BasisError::DegreeTooHigh(p));
    }
    let family = family_for(marginal)
        .ok_or_else(|| BasisError::UnsupportedMarginal(format!("{marginal:?}")))?;
    let (d, b) = classical_recurrence(family, p + 1);
    Ok(OrthonormalBasis {
        family,
        marginal: marginal.standard(),
        d,
        b,
    })
}

/// Classical basis where one exists, otherwise the numerical construction.
pub fn basis_for(marginal: &Marginal, p: usize) -> Result<OrthonormalBasis, BasisError> {
    match classical_basis(marginal, p) {
        Err(BasisError::UnsupportedMarginal(_)) => stieltjes_basis(marginal, p),
        other => other,
    }
}

impl OrthonormalBasis {
    pub fn degree(&self) -> usize {
        self.d.len() - 1
    }

    /// Same basis cut to a lower degree.
    pub fn truncated(&self, p: usize) -> OrthonormalBasis {
        assert!(p <= self.degree());
        OrthonormalBasis {
            family: self.family,
            marginal: self.marginal,
            d: self.d[..=p].to_vec(),
            b: self.b[..=p].to_vec(),
        }
    }

    /// `[φ_0(x), …, φ_p(x)]`.
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.d.len()];
        self.eval_into(x, &mut out);
        out
    }

    /// Write `φ_0(x) … φ_{len−1}(x)` into `out`; `out` may be shorter than
    /// the stored degree.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        if out.is_empty() {
            return;
        }
        out[0] = 1.0;
        if out.len() == 1 {
            return;
        }
        out[1] = (x - self.d[0]) / self.b[1].sqrt();
        for k in 1..out.len() - 1 {
            out[k + 1] =
                ((x - self.d[k]) * out[k] - self.b[k].sqrt() * out[k - 1]) / self.b[k + 1].sqrt();
        }
    }

    /// Monomial coefficients of each basis polynomial: row `k` holds
    /// `c_{k,0} … c_{k,p}` with `φ_k(x) = Σ_j c_{k,j} x^j`.
    pub fn monomial_coefficients(&self) -> Vec<Vec<f64>> {
        let n = self.d.len();
        let mut c = vec![vec![0.0; n]; n];
        c[0][0] = 1.0;
        for k in 0..n - 1 {
            let sk = self.b[k + 1].sqrt();
            for j in 0..n {
                let mut v = -self.d[k] * c[k][j];
                if j > 0 {
                    v += c[k][j - 1];
                }
                if k > 0 {
                    v -= self.b[k].sqrt() * c[k - 1][j];
                }
                c[k + 1][j] = v / sk;
            }
        }
        c
    }
}

/// Gauss rule with `n` nodes from recurrence coefficients via the
/// Golub–Welsch eigenvalue method. `d` and `b` need at least `n` entries.
pub fn gauss_from_recurrence(d: &[f64], b: &[f64], n: usize) -> QuadratureRule {
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jac[(k, k)] = d[k];
        if k + 1 < n {
            let off = b[k + 1].sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], b[0] * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    QuadratureRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// `n`-point Gauss rule of a classical family, weights summing to 1.
pub fn gauss_rule(family: Family, n: usize) -> QuadratureRule {
    let (d, b) = classical_recurrence(family, n);
    gauss_from_recurrence(&d, &b, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NORMAL: Marginal = Marginal::Normal { mu: 0.0, sigma: 1.0 };

    fn gram(basis: &OrthonormalBasis, rule: &QuadratureRule) -> f64 {
        let p = basis.degree();
        let mut g = vec![vec![0.0; p + 1]; p + 1];
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let v = basis.eval(*x);
            for i in 0..=p {
                for j in 0..=p {
                    g[i][j] += w * v[i] * v[j];
                }
            }
        }
        let mut worst: f64 = 0.0;
        for i in 0..=p {
            for j in 0..=p {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[i][j] - want).abs());
            }
        }
        worst
    }

    #[test]
    fn hermite_values() {
        let h = classical_basis(&NORMAL, 2).unwrap();
        let v = h.eval(0.0);
        assert!((v[2] + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let v = h.eval(1.0);
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] - 1.0).abs() < 1e-15 && v[2].abs() < 1e-15);
    }

    #[test]
    fn beta_one_one_is_legendre() {
        let jac = classical_basis(
            &Marginal::Beta { alpha: 1.0, beta: 1.0, lo: 0.0, hi: 5.0 },
            5,
        )
        .unwrap();
        let leg = classical_basis(&Marginal::Uniform { lo: -1.0, hi: 1.0 }, 5).unwrap();
        let (a, b) = (jac.monomial_coefficients(), leg.monomial_coefficients());
        for k in 0..=5 {
            for j in 0..=5 {
                assert!((a[k][j] - b[k][j]).abs() < 1e-12, "{k},{j}");
            }
        }
    }

    #[test]
    fn symmetric_jacobi_has_odd_zeros_at_midpoint() {
        let jac =
            classical_basis(&Marginal::Beta { alpha: 0.9, beta: 0.9, lo: 0.0, hi: 1000.0 }, 5)
                .unwrap();
        let v = jac.eval(0.0);
        for k in (1..=5).step_by(2) {
            assert!(v[k].abs() < 1e-15);
        }
    }

    #[test]
    fn classical_families_orthonormal_under_own_gauss_rule() {
        let marginals = [
            NORMAL,
            Marginal::Uniform { lo: 0.0, hi: 1.0 },
            Marginal::Beta { alpha: 2.0, beta: 3.5, lo: 0.0, hi: 1.0 },
            Marginal::Exponential { rate: 2.0 },
            Marginal::Gamma { shape: 3.0, scale: 1.0 },
        ];
        for m in marginals {
            let basis = classical_basis(&m, 5).unwrap();
            let rule = gauss_rule(basis.family, 12);
            assert!(gram(&basis, &rule) < 1e-10, "{m:?}");
        }
    }

    #[test]
    fn weibull_is_not_classical() {
        let w = Marginal::Weibull { k: 2.0, c: 1.0 };
        assert!(matches!(classical_basis(&w, 3), Err(BasisError::UnsupportedMarginal(_))));
        assert_eq!(basis_for(&w, 3).unwrap().family, Family::Numeric);
    }

    #[test]
    fn degree_cap() {
        assert_eq!(classical_basis(&NORMAL, 11), Err(BasisError::DegreeTooHigh(11)));
    }

    #[test]
    fn recurrence_matches_monomial_expansion() {
        let basis = classical_basis(&Marginal::Beta { alpha: 2.0, beta: 0.7, lo: 0.0, hi: 1.0 }, 5)
            .unwrap();
        let coef = basis.monomial_coefficients();
        for i in 0..100 {
            let x = -1.0 + 2.0 * (i as f64 + 0.5) / 100.0;
            let v = basis.eval(x);
            for k in 0..=5 {
                let m: f64 = coef[k].iter().rev().fold(0.0, |acc, c| acc * x + c);
                assert!((m - v[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gauss_hermite_integrates_moments() {
        let rule = gauss_rule(Family::Hermite, 32);
        let m4: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m4 - 3.0).abs() < 1e-12);
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }
}
