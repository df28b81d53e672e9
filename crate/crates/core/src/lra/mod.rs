//! Canonical low-rank approximations: sums of rank-one products of
//! univariate polynomial expansions, fitted by greedy rank-one correction
//! and least-squares weight updates.

mod als;
mod select;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polybasis::OrthonormalBasis;

pub use als::{
    algorithm1, algorithm1_from, correction_step, empirical_error, updating_step, BasisEvaluations, CorrectionResult,
    RankSnapshot,
};
pub use select::{fit, fit_all, fold_of, LraOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LraError {
    #[error("experimental design is empty")]
    EmptyDesign,
    #[error("design has {rows} rows but {responses} responses")]
    ShapeMismatch { rows: usize, responses: usize },
    #[error("experimental design has non-finite entries")]
    NonFinite,
    #[error("need at least {needed} design points, got {got}")]
    InsufficientDesign { needed: usize, got: usize },
    #[error("{bases} bases supplied for {dims} input dimensions")]
    BasisCount { bases: usize, dims: usize },
    #[error("basis degree {have} below requested degree {want}")]
    BasisDegree { have: usize, want: usize },
}

/// Input samples in standard space with the exactly computed responses.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentalDesign {
    /// M × n.
    pub xi: DMatrix<f64>,
    /// M × R.
    pub y: DMatrix<f64>,
}

impl ExperimentalDesign {
    pub fn new(xi: DMatrix<f64>, y: DMatrix<f64>) -> Result<Self, LraError> {
        if xi.nrows() == 0 {
            return Err(LraError::EmptyDesign);
        }
        if xi.nrows() != y.nrows() {
            return Err(LraError::ShapeMismatch {
                rows: xi.nrows(),
                responses: y.nrows(),
            });
        }
        if xi.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(LraError::NonFinite);
        }
        Ok(ExperimentalDesign { xi, y })
    }

    pub fn len(&self) -> usize {
        self.xi.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.xi.ncols()
    }
}

/// Coefficients `z^{(i)}` of one rank-one function, one vector per input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneTerm {
    pub z: Vec<Vec<f64>>,
}

impl RankOneTerm {
    /// The constant function 1.
    pub fn unit(degrees: &[usize]) -> Self {
        RankOneTerm {
            z: degrees
                .iter()
                .map(|&p| {
                    let mut v = vec![0.0; p + 1];
                    v[0] = 1.0;
                    v
                })
                .collect(),
        }
    }

    pub fn n_coefficients(&self) -> usize {
        self.z.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LraDiagnostics {
    /// Relative empirical error of the kept rank on the full design.
    pub empirical_error: f64,
    /// Cross-validation error of the selected (rank, degree).
    pub cv_error: f64,
    pub ed_size: usize,
    pub rank: usize,
    pub degree: usize,
    /// Empirical error after each kept rank.
    pub error_path: Vec<f64>,
    /// Some least-squares problem needed the ridge fallback.
    pub regularized: bool,
    /// The response was constant over the design.
    pub zero_variance: bool,
    /// Even the best candidate predicts worse than the sample mean.
    pub no_useful_model: bool,
    /// The analytic variance came out slightly negative and was set to 0.
    pub variance_clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LraSurrogate {
    pub bases: Vec<OrthonormalBasis>,
    pub terms: Vec<RankOneTerm>,
    pub weights: Vec<f64>,
    pub diagnostics: LraDiagnostics,
}

impl LraSurrogate {
    /// A surrogate returning `c` everywhere.
    pub fn constant(bases: Vec<OrthonormalBasis>, c: f64) -> Self {
        let degrees: Vec<usize> = vec![0; bases.len()];
        LraSurrogate {
            terms: vec![RankOneTerm::unit(&degrees)],
            weights: vec![c],
            bases,
            diagnostics: LraDiagnostics::default(),
        }
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn dim(&self) -> usize {
        self.bases.len()
    }

    /// Stored unknowns: all term coefficients plus the weights.
    pub fn n_unknowns(&self) -> usize {
        self.terms.iter().map(RankOneTerm::n_coefficients).sum::<usize>() + self.weights.len()
    }

    fn max_degree(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.z.iter().map(|z| z.len() - 1))
            .max()
            .unwrap_or(0)
    }

    /// Value at one standard-space point.
    pub fn evaluate(&self, xi: &[f64]) -> f64 {
        let mut phi = vec![0.0; self.max_degree() + 1];
        let mut prod = vec![1.0; self.terms.len()];
        for (i, basis) in self.bases.iter().enumerate() {
            basis.eval_into(xi[i], &mut phi);
            for (l, term) in self.terms.iter().enumerate() {
                let z = &term.z[i];
                prod[l] *= z.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        prod.iter().zip(&self.weights).map(|(p, b)| p * b).sum()
    }

    /// Value from precomputed basis values: `phi[i][k] = φ_k^{(i)}(ξ_i)`
    /// for k up to at least the surrogate's degree.
    pub fn evaluate_with(&self, phi: &[Vec<f64>]) -> f64 {
        self.terms
            .iter()
            .zip(&self.weights)
            .map(|(t, b)| {
                b * t
                    .z
                    .iter()
                    .zip(phi)
                    .map(|(z, f)| z.iter().zip(f).map(|(a, c)| a * c).sum::<f64>())
                    .product::<f64>()
            })
            .sum()
    }

    /// Values at each row of `xi`.
    pub fn evaluate_batch(&self, xi: &DMatrix<f64>) -> Vec<f64> {
        use rayon::prelude::*;
        (0..xi.nrows())
            .into_par_iter()
            .map(|r| {
                let row: Vec<f64> = xi.row(r).iter().copied().collect();
                self.evaluate(&row)
            })
            .collect()
    }

    /// Σ_l b_l Π_i z_{0,l}^{(i)}.
    pub fn analytic_mean(&self) -> f64 {
        self.terms
            .iter()
            .zip(&self.weights)
            .map(|(t, b)| b * t.z.iter().map(|z| z[0]).product::<f64>())
            .sum()
    }

    /// Variance from orthonormality:
    /// Σ_{l,m} b_l b_m (Π_i ⟨z_l^{(i)}, z_m^{(i)}⟩ − Π_i z_{0,l}^{(i)} z_{0,m}^{(i)}).
    /// Tiny negative round-off is returned as 0.
    pub fn analytic_variance(&self) -> f64 {
        self.variance_raw().max(0.0)
    }

    fn variance_raw(&self) -> f64 {
        let mut v = 0.0;
        for (tl, bl) in self.terms.iter().zip(&self.weights) {
            for (tm, bm) in self.terms.iter().zip(&self.weights) {
                let mut inner = 1.0;
                let mut means = 1.0;
                for (zl, zm) in tl.z.iter().zip(&tm.z) {
                    inner *= zl.iter().zip(zm).map(|(a, b)| a * b).sum::<f64>();
                    means *= zl[0] * zm[0];
                }
                v += bl * bm * (inner - means);
            }
        }
        v
    }

    pub fn analytic_std(&self) -> f64 {
        self.analytic_variance().sqrt()
    }
}
