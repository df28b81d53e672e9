use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::{InputError, Marginal, RandomInputSpec};
use crate::polybasis::{gauss_rule, Family, QuadratureRule};

const GH_POINTS: usize = 32;
const ROOT_TOL: f64 = 1e-9;
const RHO_EDGE: f64 = 0.9999;

/// Gaussian-space correlation and its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct NatafModel {
    pub rho_z: DMatrix<f64>,
    pub chol_l: DMatrix<f64>,
    /// The pairwise matrix was not positive definite and was replaced by
    /// its nearest positive-definite correlation matrix.
    pub repaired: bool,
    independent: Vec<bool>,
}

struct Standardized<'a> {
    marginal: &'a Marginal,
    mean: f64,
    std: f64,
}

impl<'a> Standardized<'a> {
    fn new(marginal: &'a Marginal, rule: &QuadratureRule) -> Self {
        let mean = rule.integrate(|z| marginal.from_normal(z));
        let var = rule.integrate(|z| (marginal.from_normal(z) - mean).powi(2));
        Standardized {
            marginal,
            mean,
            std: var.sqrt(),
        }
    }

    fn at(&self, z: f64) -> f64 {
        (self.marginal.from_normal(z) - self.mean) / self.std
    }
}

/// Physical-space correlation induced by Gaussian-space correlation
/// `rho_z` between two marginals, by tensor Gauss–Hermite quadrature.
pub fn induced_correlation(a: &Marginal, b: &Marginal, rho_z: f64) -> f64 {
    let rule = gauss_rule(Family::Hermite, GH_POINTS);
    let (sa, sb) = (Standardized::new(a, &rule), Standardized::new(b, &rule));
    induced(&sa, &sb, rho_z, &rule)
}

fn induced(sa: &Standardized, sb: &Standardized, rho_z: f64, rule: &QuadratureRule) -> f64 {
    let c = (1.0 - rho_z * rho_z).max(0.0).sqrt();
    let mut sum = 0.0;
    for (x1, w1) in rule.nodes.iter().zip(&rule.weights) {
        let ga = sa.at(*x1);
        for (x2, w2) in rule.nodes.iter().zip(&rule.weights) {
            sum += w1 * w2 * ga * sb.at(rho_z * x1 + c * x2);
        }
    }
    sum
}

/// Gaussian-space correlation reproducing physical correlation `rho`
/// between marginals `a` and `b`.
pub fn gaussian_correlation(a: &Marginal, b: &Marginal, rho: f64) -> Result<f64, InputError> {
    if rho == 0.0 {
        return Ok(0.0);
    }
    if matches!(a, Marginal::Normal { .. }) && matches!(b, Marginal::Normal { .. }) {
        return Ok(rho);
    }
    let rule = gauss_rule(Family::Hermite, GH_POINTS);
    let (sa, sb) = (Standardized::new(a, &rule), Standardized::new(b, &rule));
    let f = |r: f64| induced(&sa, &sb, r, &rule) - rho;

    // The induced correlation increases with rho_z, so a sign change on
    // [−edge, edge] brackets the root.
    let (mut lo, mut hi) = (-RHO_EDGE, RHO_EDGE);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(InputError::RootNotBracketed {
            target: rho,
            reachable: (f_lo + rho, f_hi + rho),
        });
    }
    // Secant from the identity guess, falling back to bisection whenever a
    // step leaves the bracket.
    let (mut x0, mut f0) = (lo, f_lo);
    let mut x1 = rho;
    for _ in 0..200 {
        let f1 = f(x1);
        if f1.abs() < ROOT_TOL {
            return Ok(x1);
        }
        if f1 < 0.0 {
            lo = x1;
        } else {
            hi = x1;
        }
        let mut next = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        (x0, f0) = (x1, f1);
        x1 = next;
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(x1)
}

/// Nearest correlation matrix with eigenvalues at least `floor`: clip the
/// spectrum and rescale to a unit diagonal.
fn nearest_positive_definite(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let clipped = eig.eigenvalues.map(|v| v.max(floor));
    let r = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let n = r.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            r[(i, j)] / (r[(i, i)] * r[(j, j)]).sqrt()
        }
    })
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Solve every correlated pair and factor the resulting matrix. With
/// `repair` set, a non-positive-definite result is replaced by its nearest
/// positive-definite correlation matrix instead of failing.
pub fn build_nataf_with(spec: &RandomInputSpec, repair: bool) -> Result<NatafModel, InputError> {
    let n = spec.channels.len();
    let mut rho_z = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let r = spec.rho[(i, j)];
            if r != 0.0 {
                let z = gaussian_correlation(&spec.channels[i].marginal, &spec.channels[j].marginal, r)?;
                rho_z[(i, j)] = z;
                rho_z[(j, i)] = z;
            }
        }
    }
    let mut repaired = false;
    let chol = match rho_z.clone().cholesky() {
        Some(c) => c,
        None if repair => {
            rho_z = nearest_positive_definite(&rho_z, 1e-8);
            repaired = true;
            rho_z.clone().cholesky().ok_or(InputError::NotPositiveDefinite {
                min_eigenvalue: min_eigenvalue(&rho_z),
            })?
        }
        None => {
            return Err(InputError::NotPositiveDefinite {
                min_eigenvalue: min_eigenvalue(&rho_z),
            })
        }
    };
    let independent = (0..n)
        .map(|i| (0..n).all(|j| i == j || rho_z[(i, j)] == 0.0))
        .collect();
    Ok(NatafModel {
        chol_l: chol.l(),
        rho_z,
        repaired,
        independent,
    })
}

pub fn build_nataf(spec: &RandomInputSpec) -> Result<NatafModel, InputError> {
    build_nataf_with(spec, false)
}

/// Map standard-space samples (rows) to correlated physical samples.
pub fn to_physical(xi: &DMatrix<f64>, spec: &RandomInputSpec, model: &NatafModel) -> DMatrix<f64> {
    let n = spec.channels.len();
    assert_eq!(xi.ncols(), n, "sample width must match channel count");
    let marginals: Vec<Marginal> = spec.channels.iter().map(|c| c.marginal).collect();
    let standard: Vec<Marginal> = marginals.iter().map(Marginal::standard).collect();
    let rows: Vec<Vec<f64>> = (0..xi.nrows())
        .into_par_iter()
        .map(|r| {
            let u0: Vec<f64> = (0..n).map(|c| standard[c].normal_score(xi[(r, c)])).collect();
            (0..n)
                .map(|c| {
                    if model.independent[c] {
                        marginals[c].from_standard(xi[(r, c)])
                    } else {
                        let z: f64 = (0..=c).map(|k| model.chol_l[(c, k)] * u0[k]).sum();
                        marginals[c].from_normal(z)
                    }
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(xi.nrows(), n, |r, c| rows[r][c])
}
