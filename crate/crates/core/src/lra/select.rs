use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::als::{algorithm1, BasisEvaluations, RankSnapshot};
use super::{ExperimentalDesign, LraDiagnostics, LraError, LraSurrogate};
use crate::polybasis::OrthonormalBasis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LraOptions {
    /// Largest rank tried.
    pub max_rank: usize,
    /// Candidate polynomial degrees, shared by all inputs.
    pub degrees: Vec<usize>,
    /// Relative change of the ALS residual norm that ends a correction step.
    pub als_tol: f64,
    pub max_cycles: usize,
    /// Cross-validation folds used to pick rank and degree.
    pub folds: usize,
}

impl Default for LraOptions {
    fn default() -> Self {
        LraOptions {
            max_rank: 5,
            degrees: vec![2, 3, 4, 5],
            als_tol: 1e-6,
            max_cycles: 100,
            folds: 3,
        }
    }
}

/// Fold of a design row, from a hash of its values so the split does not
/// depend on row order.
pub fn fold_of(row: &[f64], folds: usize) -> usize {
    let h = row.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| {
        v.to_bits()
            .to_le_bytes()
            .iter()
            .fold(h, |h, b| (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3))
    });
    (h % folds as u64) as usize
}

fn predict(evals: &BasisEvaluations, snap: &RankSnapshot) -> Vec<f64> {
    let mut out = vec![0.0; evals.len()];
    for (term, b) in snap.terms.iter().zip(&snap.weights) {
        for (o, v) in out.iter_mut().zip(evals.term_values(term)) {
            *o += b * v;
        }
    }
    out
}

fn mean_var(y: &[f64]) -> (f64, f64) {
    let m = y.len() as f64;
    let mean = y.iter().sum::<f64>() / m;
    let var = if y.len() > 1 {
        y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

struct Candidate {
    degree: usize,
    rank: usize,
    cv: f64,
    unknowns: usize,
}

/// Fit one response: for each candidate degree run the greedy rank
/// enrichment on the full design, score every kept rank by k-fold cross
/// validation, and return the full-design model of the best (rank, degree).
pub fn fit(
    xi: &DMatrix<f64>,
    y: &[f64],
    bases: &[OrthonormalBasis],
    opts: &LraOptions,
) -> Result<LraSurrogate, LraError> {
    let (m, n) = (xi.nrows(), xi.ncols());
    if m == 0 {
        return Err(LraError::EmptyDesign);
    }
    if y.len() != m {
        return Err(LraError::ShapeMismatch {
            rows: m,
            responses: y.len(),
        });
    }
    if bases.len() != n {
        return Err(LraError::BasisCount {
            bases: bases.len(),
            dims: n,
        });
    }
    if xi.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(LraError::NonFinite);
    }
    let p_max = opts.degrees.iter().copied().max().unwrap_or(0);
    if let Some(b) = bases.iter().find(|b| b.degree() < p_max) {
        return Err(LraError::BasisDegree {
            have: b.degree(),
            want: p_max,
        });
    }
    if m < p_max + 1 || m < 2 {
        return Err(LraError::InsufficientDesign {
            needed: (p_max + 1).max(2),
            got: m,
        });
    }

    let (mean, var) = mean_var(y);
    if var <= 0.0 {
        let mut s = LraSurrogate::constant(bases.iter().map(|b| b.truncated(0)).collect(), mean);
        s.diagnostics = LraDiagnostics {
            ed_size: m,
            rank: 1,
            zero_variance: true,
            error_path: vec![0.0],
            ..LraDiagnostics::default()
        };
        return Ok(s);
    }

    let folds: Vec<usize> = (0..m)
        .map(|r| {
            let row: Vec<f64> = xi.row(r).iter().copied().collect();
            fold_of(&row, opts.folds.max(2))
        })
        .collect();

    let mut best: Option<Candidate> = None;
    let mut runs: Vec<(usize, Vec<RankSnapshot>)> = Vec::new();
    for &p in &opts.degrees {
        let truncated: Vec<OrthonormalBasis> = bases.iter().map(|b| b.truncated(p)).collect();
        let evals = BasisEvaluations::new(xi, &truncated, p);
        let full = algorithm1(&evals, y, opts.max_rank, opts.als_tol, opts.max_cycles);
        let r_star = full.len();

        let mut press = vec![0.0; r_star];
        for f in 0..opts.folds.max(2) {
            let train: Vec<usize> = (0..m).filter(|&r| folds[r] != f).collect();
            let test: Vec<usize> = (0..m).filter(|&r| folds[r] == f).collect();
            if test.is_empty() {
                continue;
            }
            let y_train: Vec<f64> = train.iter().map(|&r| y[r]).collect();
            let test_evals = evals.rows(&test);
            let (train_mean, train_var) = mean_var(&y_train);
            let snaps = if train_var > 0.0 && train.len() > p {
                algorithm1(&evals.rows(&train), &y_train, r_star, opts.als_tol, opts.max_cycles)
            } else {
                Vec::new()
            };
            for (r, slot) in press.iter_mut().enumerate() {
                let pred = match snaps.get(r.min(snaps.len().saturating_sub(1))) {
                    Some(s) if !snaps.is_empty() => predict(&test_evals, s),
                    _ => vec![train_mean; test.len()],
                };
                *slot += test
                    .iter()
                    .zip(&pred)
                    .map(|(&row, q)| (y[row] - q).powi(2))
                    .sum::<f64>();
            }
        }
        for (r, ss) in press.iter().enumerate() {
            let cand = Candidate {
                degree: p,
                rank: r + 1,
                cv: ss / m as f64 / var,
                unknowns: (r + 1) * (n * (p + 1) + 1),
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    cand.cv < b.cv - 1e-12
                        || ((cand.cv - b.cv).abs() <= 1e-12 && cand.unknowns < b.unknowns)
                }
            };
            if better {
                best = Some(cand);
            }
        }
        runs.push((p, full));
    }

    let best = best.expect("at least one candidate degree");
    let (_, full) = runs.iter().find(|(p, _)| *p == best.degree).expect("run exists");
    let snap = &full[best.rank - 1];
    let mut s = LraSurrogate {
        bases: bases.iter().map(|b| b.truncated(best.degree)).collect(),
        terms: snap.terms.clone(),
        weights: snap.weights.clone(),
        diagnostics: LraDiagnostics {
            empirical_error: snap.error,
            cv_error: best.cv,
            ed_size: m,
            rank: best.rank,
            degree: best.degree,
            error_path: full[..best.rank].iter().map(|s| s.error).collect(),
            regularized: snap.regularized,
            zero_variance: false,
            no_useful_model: best.cv > 1.0,
            variance_clamped: false,
        },
    };
    s.diagnostics.variance_clamped = s.variance_raw() < 0.0;
    Ok(s)
}

/// Fit every response column of a design independently.
pub fn fit_all(
    ed: &ExperimentalDesign,
    bases: &[OrthonormalBasis],
    opts: &LraOptions,
) -> Result<Vec<LraSurrogate>, LraError> {
    (0..ed.y.ncols())
        .into_par_iter()
        .map(|c| {
            let y: Vec<f64> = ed.y.column(c).iter().copied().collect();
            fit(&ed.xi, &y, bases, opts)
        })
        .collect()
}
