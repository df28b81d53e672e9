use nalgebra::{DMatrix, DVector};

use super::RankOneTerm;
use crate::linalg::{cholesky_solve_in_place, least_squares, solve_normal, LsqSolution};
use crate::polybasis::OrthonormalBasis;

/// Univariate basis values at every design point, row-major per input:
/// `vals[i][m·(p_i+1) + k] = φ_k^{(i)}(ξ_{m,i})`.
#[derive(Debug, Clone)]
pub struct BasisEvaluations {
    m: usize,
    degrees: Vec<usize>,
    vals: Vec<Vec<f64>>,
}

impl BasisEvaluations {
    pub fn new(xi: &DMatrix<f64>, bases: &[OrthonormalBasis], degree: usize) -> Self {
        let m = xi.nrows();
        let vals = bases
            .iter()
            .enumerate()
            .map(|(i, basis)| {
                let mut v = vec![0.0; m * (degree + 1)];
                for r in 0..m {
                    basis.eval_into(xi[(r, i)], &mut v[r * (degree + 1)..(r + 1) * (degree + 1)]);
                }
                v
            })
            .collect();
        BasisEvaluations {
            m,
            degrees: vec![degree; bases.len()],
            vals,
        }
    }

    /// Restriction to the listed design rows.
    pub fn rows(&self, rows: &[usize]) -> Self {
        let vals = self
            .vals
            .iter()
            .zip(&self.degrees)
            .map(|(v, &p)| {
                let w = p + 1;
                rows.iter().flat_map(|&r| v[r * w..(r + 1) * w].iter().copied()).collect()
            })
            .collect();
        BasisEvaluations {
            m: rows.len(),
            degrees: self.degrees.clone(),
            vals,
        }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    fn row(&self, i: usize, r: usize) -> &[f64] {
        let w = self.degrees[i] + 1;
        &self.vals[i][r * w..(r + 1) * w]
    }

    /// `Σ_k z_k φ_k^{(i)}` at every design point.
    fn univariate(&self, i: usize, z: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|r| self.row(i, r).iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Values of a rank-one term at every design point.
    pub fn term_values(&self, term: &RankOneTerm) -> Vec<f64> {
        let mut out = vec![1.0; self.m];
        for (i, z) in term.z.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.univariate(i, z)) {
                *o *= v;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct CorrectionResult {
    pub term: RankOneTerm,
    /// Term values on the design.
    pub values: Vec<f64>,
    pub cycles: usize,
    pub regularized: bool,
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Rescale the coefficient vectors to equal norms without changing the
/// product.
fn balance(z: &mut [Vec<f64>], v: &mut [Vec<f64>]) {
    let norms: Vec<f64> = z.iter().map(|zi| sum_sq(zi).sqrt()).collect();
    if norms.iter().any(|&s| s == 0.0 || !s.is_finite()) {
        return;
    }
    let geo = (norms.iter().map(|s| s.ln()).sum::<f64>() / norms.len() as f64).exp();
    for ((zi, vi), s) in z.iter_mut().zip(v.iter_mut()).zip(&norms) {
        let f = geo / s;
        zi.iter_mut().for_each(|x| *x *= f);
        vi.iter_mut().for_each(|x| *x *= f);
    }
}

/// Lower triangle of `Σ_r c_r² φ_r φ_rᵀ` and `Σ_r c_r t_r φ_r` with
/// `c_r = left_r · suffix_r`, written row-major into `gram` and `rhs`.
fn accumulate<const K: usize>(
    vals: &[f64],
    left: &[f64],
    suffix: &[f64],
    target: &[f64],
    gram: &mut [f64],
    rhs: &mut [f64],
) {
    let mut g = [[0.0; K]; K];
    let mut h = [0.0; K];
    for (((phi, l), s), t) in vals.chunks_exact(K).zip(left).zip(suffix).zip(target) {
        let c = l * s;
        let q: [f64; K] = std::array::from_fn(|a| c * phi[a]);
        for a in 0..K {
            h[a] += q[a] * t;
            for b in 0..=a {
                g[a][b] += q[a] * q[b];
            }
        }
    }
    for a in 0..K {
        rhs[a] = h[a];
        gram[a * K..a * K + a + 1].copy_from_slice(&g[a][..=a]);
    }
}

#[allow(clippy::too_many_arguments)]
fn accumulate_dyn(
    k: usize,
    vals: &[f64],
    left: &[f64],
    suffix: &[f64],
    target: &[f64],
    gram: &mut [f64],
    rhs: &mut [f64],
    q: &mut [f64],
) {
    gram[..k * k].fill(0.0);
    rhs[..k].fill(0.0);
    for (((phi, l), s), t) in vals.chunks_exact(k).zip(left).zip(suffix).zip(target) {
        let c = l * s;
        for a in 0..k {
            q[a] = c * phi[a];
        }
        for a in 0..k {
            rhs[a] += q[a] * t;
            for b in 0..=a {
                gram[a * k + b] += q[a] * q[b];
            }
        }
    }
}

/// Find a rank-one term approximating `target` on the design by
/// alternating least squares: each input's coefficients are refitted with
/// the others frozen, cycling until the residual norm changes by less than
/// `tol` (relative) or `max_cycles` is reached. Returns the best iterate.
pub fn correction_step(
    evals: &BasisEvaluations,
    target: &[f64],
    init: Option<&RankOneTerm>,
    tol: f64,
    max_cycles: usize,
) -> CorrectionResult {
    let n = evals.degrees.len();
    let m = evals.m;
    let mut z = init
        .cloned()
        .unwrap_or_else(|| RankOneTerm::unit(&evals.degrees))
        .z;
    let target_ss = sum_sq(target);
    if target_ss == 0.0 {
        z[0].iter_mut().for_each(|x| *x = 0.0);
        return CorrectionResult {
            values: vec![0.0; m],
            term: RankOneTerm { z },
            cycles: 0,
            regularized: false,
        };
    }
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| evals.univariate(i, &z[i])).collect();
    let product = |v: &[Vec<f64>]| -> Vec<f64> {
        let mut p = vec![1.0; m];
        for vi in v {
            p.iter_mut().zip(vi).for_each(|(a, b)| *a *= b);
        }
        p
    };
    let rss_of = |p: &[f64]| -> f64 { target.iter().zip(p).map(|(t, q)| (t - q).powi(2)).sum() };

    let mut values = product(&v);
    let mut best_rss = rss_of(&values);
    let mut best = (z.clone(), values.clone());
    let mut prev_norm = best_rss.sqrt();
    let mut regularized = false;
    let mut cycles = 0;
    let mut suffix = vec![vec![1.0; m]; n];
    let mut left = vec![1.0; m];
    let kmax = evals.degrees.iter().max().map_or(1, |p| p + 1);
    let mut gram = vec![0.0; kmax * kmax];
    let mut rhs = vec![0.0; kmax];
    let mut q = vec![0.0; kmax];
    let mut saved = vec![0.0; kmax * kmax + kmax];

    while cycles < max_cycles {
        cycles += 1;
        for i in (0..n.saturating_sub(1)).rev() {
            let (head, tail) = suffix.split_at_mut(i + 1);
            for ((h, t), vv) in head[i].iter_mut().zip(&tail[0]).zip(&v[i + 1]) {
                *h = t * vv;
            }
        }
        left.fill(1.0);
        for i in 0..n {
            let k = evals.degrees[i] + 1;
            let vals = &evals.vals[i];
            let s_i = &suffix[i];
            match k {
                1 => accumulate::<1>(vals, &left, s_i, target, &mut gram, &mut rhs),
                2 => accumulate::<2>(vals, &left, s_i, target, &mut gram, &mut rhs),
                3 => accumulate::<3>(vals, &left, s_i, target, &mut gram, &mut rhs),
                4 => accumulate::<4>(vals, &left, s_i, target, &mut gram, &mut rhs),
                5 => accumulate::<5>(vals, &left, s_i, target, &mut gram, &mut rhs),
                6 => accumulate::<6>(vals, &left, s_i, target, &mut gram, &mut rhs),
                _ => accumulate_dyn(k, vals, &left, s_i, target, &mut gram, &mut rhs, &mut q),
            }
            saved[..k * k].copy_from_slice(&gram[..k * k]);
            saved[k * k..k * k + k].copy_from_slice(&rhs[..k]);
            if cholesky_solve_in_place(&mut gram[..k * k], &mut rhs[..k], k) {
                z[i].copy_from_slice(&rhs[..k]);
            } else {
                let g = DMatrix::from_fn(k, k, |a, b| saved[a.max(b) * k + a.min(b)]);
                let b = DVector::from_column_slice(&saved[k * k..k * k + k]);
                let LsqSolution { coef, .. } = solve_normal(g, &b);
                regularized = true;
                z[i].copy_from_slice(coef.as_slice());
            }
            let zi = &z[i];
            for ((vr, lr), phi) in v[i].iter_mut().zip(left.iter_mut()).zip(vals.chunks_exact(k)) {
                *vr = phi.iter().zip(zi).map(|(a, b)| a * b).sum();
                *lr *= *vr;
            }
        }
        balance(&mut z, &mut v);
        values = product(&v);
        let rss = rss_of(&values);
        if rss < best_rss {
            best_rss = rss;
            best = (z.clone(), values.clone());
        }
        let norm = rss.sqrt();
        let converged = (prev_norm - norm).abs() <= tol * prev_norm;
        prev_norm = norm;
        if converged || rss <= 1e-28 * target_ss {
            break;
        }
    }
    CorrectionResult {
        term: RankOneTerm { z: best.0 },
        values: best.1,
        cycles,
        regularized,
    }
}

/// Least-squares weights of the term columns against `y`.
pub fn updating_step(columns: &[Vec<f64>], y: &[f64]) -> LsqSolution {
    let m = y.len();
    let a = DMatrix::from_fn(m, columns.len(), |r, l| columns[l][r]);
    least_squares(&a, &DVector::from_column_slice(y))
}

/// Relative empirical error: mean squared residual over the unbiased sample
/// variance of `y`. `None` when `y` is constant.
pub fn empirical_error(residual: &[f64], y: &[f64]) -> Option<f64> {
    let m = y.len() as f64;
    if y.len() < 2 {
        return None;
    }
    let mean = y.iter().sum::<f64>() / m;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    if var <= 0.0 || !var.is_finite() {
        return None;
    }
    Some(sum_sq(residual) / m / var)
}

/// Model after a kept rank.
#[derive(Debug, Clone)]
pub struct RankSnapshot {
    pub terms: Vec<RankOneTerm>,
    pub weights: Vec<f64>,
    pub error: f64,
    pub regularized: bool,
}

/// Greedy rank enrichment: alternate correction and updating steps,
/// keeping rank r while its empirical error does not exceed rank r−1's.
/// `y` must have nonzero variance.
pub fn algorithm1(
    evals: &BasisEvaluations,
    y: &[f64],
    max_rank: usize,
    tol: f64,
    max_cycles: usize,
) -> Vec<RankSnapshot> {
    algorithm1_from(evals, y, max_rank, tol, max_cycles, &[])
}

/// As [`algorithm1`], starting the r-th correction step from `init[r]`
/// when given instead of the constant term.
pub fn algorithm1_from(
    evals: &BasisEvaluations,
    y: &[f64],
    max_rank: usize,
    tol: f64,
    max_cycles: usize,
    init: &[RankOneTerm],
) -> Vec<RankSnapshot> {
    let mut snapshots: Vec<RankSnapshot> = Vec::new();
    let mut terms: Vec<RankOneTerm> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut residual = y.to_vec();
    let mut regularized = false;
    for r in 0..max_rank {
        let corr = correction_step(evals, &residual, init.get(r), tol, max_cycles);
        regularized |= corr.regularized;
        terms.push(corr.term);
        columns.push(corr.values);
        let upd = updating_step(&columns, y);
        let reg = regularized || upd.regularized;
        let weights: Vec<f64> = upd.coef.iter().copied().collect();
        let fitted: Vec<f64> = (0..y.len())
            .map(|r| columns.iter().zip(&weights).map(|(c, b)| c[r] * b).sum())
            .collect();
        let new_residual: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        let error = empirical_error(&new_residual, y).unwrap_or(0.0);
        if let Some(last) = snapshots.last() {
            if error > last.error {
                break;
            }
        }
        regularized = reg;
        residual = new_residual;
        snapshots.push(RankSnapshot {
            terms: terms.clone(),
            weights,
            error,
            regularized,
        });
        if error <= 1e-24 {
            break;
        }
    }
    snapshots
}
