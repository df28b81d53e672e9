//! Full polynomial chaos expansions on total-degree or hyperbolic index
//! sets, fitted by ordinary least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::least_squares;
use crate::polybasis::OrthonormalBasis;

/// Default largest index set that will be built.
pub const DEFAULT_INDEX_CAP: usize = 500_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PceError {
    #[error("index set would hold {count} terms, above the cap of {cap}")]
    CombinatorialOverflow { count: u128, cap: usize },
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),
    #[error("{terms} basis terms but only {points} design points")]
    Underdetermined { terms: usize, points: usize },
    #[error("least-squares matrix is rank deficient")]
    RankDeficientLSQ,
    #[error("design has {rows} rows, {responses} responses and {bases} bases for {dims} inputs")]
    ShapeMismatch {
        rows: usize,
        responses: usize,
        bases: usize,
        dims: usize,
    },
    #[error("basis degree {have} below index degree {want}")]
    BasisDegree { have: usize, want: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Truncation {
    TotalDegree { p: usize },
    /// `(Σ α_i^q)^{1/q} ≤ p`.
    Hyperbolic { p: usize, q: f64 },
}

impl Truncation {
    pub fn degree(&self) -> usize {
        match *self {
            Truncation::TotalDegree { p } | Truncation::Hyperbolic { p, .. } => p,
        }
    }
}

/// Nonzero entries `(input, degree)` of one multi-index, inputs ascending.
pub type MultiIndex = Vec<(usize, usize)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiIndexSet {
    pub dim: usize,
    pub truncation: Truncation,
    /// Graded order; the zero index comes first.
    pub indices: Vec<MultiIndex>,
}

/// `C(n+p, p)`, saturating.
pub fn total_degree_count(n: usize, p: usize) -> u128 {
    let mut c: u128 = 1;
    for k in 1..=p as u128 {
        c = match c.checked_mul(n as u128 + k) {
            Some(v) => v / k,
            None => return u128::MAX,
        };
    }
    c
}

impl MultiIndexSet {
    pub fn build(n: usize, truncation: Truncation) -> Result<Self, PceError> {
        Self::build_capped(n, truncation, DEFAULT_INDEX_CAP)
    }

    pub fn build_capped(n: usize, truncation: Truncation, cap: usize) -> Result<Self, PceError> {
        if n == 0 {
            return Err(PceError::InvalidTruncation("dimension must be at least 1".into()));
        }
        let p = truncation.degree();
        let q = match truncation {
            Truncation::TotalDegree { .. } => 1.0,
            Truncation::Hyperbolic { q, .. } => {
                if !(q > 0.0 && q <= 1.0) {
                    return Err(PceError::InvalidTruncation(format!("q = {q} outside (0, 1]")));
                }
                q
            }
        };
        if let Truncation::TotalDegree { .. } = truncation {
            let count = total_degree_count(n, p);
            if count > cap as u128 {
                return Err(PceError::CombinatorialOverflow { count, cap });
            }
        }
        // Nonzero degrees are added for ascending inputs; the q-norm only
        // grows, so a failing prefix prunes the subtree.
        let budget = (p as f64).powf(q) * (1.0 + 1e-12);
        let mut indices: Vec<MultiIndex> = vec![Vec::new()];
        let mut stack: Vec<(MultiIndex, f64)> = vec![(Vec::new(), 0.0)];
        while let Some((idx, used)) = stack.pop() {
            let start = idx.last().map_or(0, |&(i, _)| i + 1);
            for i in start..n {
                for deg in 1..=p {
                    let u = used + (deg as f64).powf(q);
                    if u > budget {
                        break;
                    }
                    let mut next = idx.clone();
                    next.push((i, deg));
                    indices.push(next.clone());
                    if indices.len() > cap {
                        return Err(PceError::CombinatorialOverflow {
                            count: indices.len() as u128,
                            cap,
                        });
                    }
                    stack.push((next, u));
                }
            }
        }
        let key = |m: &MultiIndex| -> (usize, Vec<(usize, usize)>) {
            (m.iter().map(|&(_, d)| d).sum(), m.clone())
        };
        indices.sort_by_cached_key(key);
        Ok(MultiIndexSet {
            dim: n,
            truncation,
            indices,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.indices
            .iter()
            .flat_map(|m| m.iter().map(|&(_, d)| d))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PceSurrogate {
    pub bases: Vec<OrthonormalBasis>,
    pub index_set: MultiIndexSet,
    pub coefficients: Vec<f64>,
}

fn univariate_table(bases: &[OrthonormalBasis], xi: &[f64], p: usize) -> Vec<Vec<f64>> {
    bases
        .iter()
        .zip(xi)
        .map(|(b, &x)| {
            let mut v = vec![0.0; p + 1];
            b.eval_into(x, &mut v);
            v
        })
        .collect()
}

fn index_value(table: &[Vec<f64>], idx: &MultiIndex) -> f64 {
    idx.iter().map(|&(i, d)| table[i][d]).product()
}

/// Least-squares expansion of `y` on the index set.
pub fn fit_pce(
    xi: &DMatrix<f64>,
    y: &[f64],
    bases: &[OrthonormalBasis],
    index_set: &MultiIndexSet,
) -> Result<PceSurrogate, PceError> {
    let (m, n) = (xi.nrows(), xi.ncols());
    if y.len() != m || bases.len() != n || index_set.dim != n {
        return Err(PceError::ShapeMismatch {
            rows: m,
            responses: y.len(),
            bases: bases.len(),
            dims: index_set.dim,
        });
    }
    let p = index_set.max_degree();
    if let Some(b) = bases.iter().find(|b| b.degree() < p) {
        return Err(PceError::BasisDegree {
            have: b.degree(),
            want: p,
        });
    }
    let k = index_set.len();
    if k > m {
        return Err(PceError::Underdetermined {
            terms: k,
            points: m,
        });
    }
    let mut a = DMatrix::<f64>::zeros(m, k);
    for r in 0..m {
        let row: Vec<f64> = xi.row(r).iter().copied().collect();
        let table = univariate_table(bases, &row, p);
        for (c, idx) in index_set.indices.iter().enumerate() {
            a[(r, c)] = index_value(&table, idx);
        }
    }
    let sol = least_squares(&a, &DVector::from_column_slice(y));
    if sol.regularized {
        return Err(PceError::RankDeficientLSQ);
    }
    Ok(PceSurrogate {
        bases: bases.iter().map(|b| b.truncated(p)).collect(),
        index_set: index_set.clone(),
        coefficients: sol.coef.iter().copied().collect(),
    })
}

impl PceSurrogate {
    pub fn n_unknowns(&self) -> usize {
        self.coefficients.len()
    }

    pub fn evaluate(&self, xi: &[f64]) -> f64 {
        let table = univariate_table(&self.bases, xi, self.index_set.max_degree());
        self.index_set
            .indices
            .iter()
            .zip(&self.coefficients)
            .map(|(idx, c)| c * index_value(&table, idx))
            .sum()
    }

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

    /// Mean and variance from orthonormality.
    pub fn moments(&self) -> (f64, f64) {
        let mut mean = 0.0;
        let mut var = 0.0;
        for (idx, c) in self.index_set.indices.iter().zip(&self.coefficients) {
            if idx.is_empty() {
                mean += c;
            } else {
                var += c * c;
            }
        }
        (mean, var)
    }
}
