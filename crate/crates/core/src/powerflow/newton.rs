use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;

use super::{InjectionSet, PowerFlowError, PowerFlowSolution, SolveOptions};
use crate::casedata::{AdmittanceMatrix, BusKind};

pub(super) struct NewtonState {
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    pub iterations: usize,
    pub max_mismatch: f64,
}

/// Per-unit complex injections S = V ∘ conj(Y V).
pub(super) fn bus_injections(ybus: &AdmittanceMatrix, vm: &[f64], va: &[f64]) -> Vec<Complex64> {
    let v = phasors(vm, va);
    let current = ybus.mul_vec(&v);
    v.iter().zip(&current).map(|(v, i)| v * i.conj()).collect()
}

fn phasors(vm: &[f64], va: &[f64]) -> Vec<Complex64> {
    vm.iter()
        .zip(va)
        .map(|(&m, &a)| Complex64::from_polar(m, a))
        .collect()
}

/// Variable layout: angles of every non-slack bus, then magnitudes of PQ
/// buses. Equation rows follow the same ordering (P then Q).
struct Layout {
    pvpq: Vec<usize>,
    pq: Vec<usize>,
    angle_col: Vec<Option<usize>>,
    mag_col: Vec<Option<usize>>,
}

impl Layout {
    fn new(kinds: &[BusKind]) -> Self {
        let pvpq: Vec<usize> = (0..kinds.len())
            .filter(|&k| kinds[k] != BusKind::Slack)
            .collect();
        let pq: Vec<usize> = (0..kinds.len())
            .filter(|&k| kinds[k] == BusKind::PQ)
            .collect();
        let mut angle_col = vec![None; kinds.len()];
        let mut mag_col = vec![None; kinds.len()];
        for (c, &k) in pvpq.iter().enumerate() {
            angle_col[k] = Some(c);
        }
        for (c, &k) in pq.iter().enumerate() {
            mag_col[k] = Some(pvpq.len() + c);
        }
        Layout {
            pvpq,
            pq,
            angle_col,
            mag_col,
        }
    }

    fn dim(&self) -> usize {
        self.pvpq.len() + self.pq.len()
    }
}

fn residual(
    s: &[Complex64],
    spec: &[Complex64],
    layout: &Layout,
) -> Vec<f64> {
    let mut f = Vec::with_capacity(layout.dim());
    f.extend(layout.pvpq.iter().map(|&k| s[k].re - spec[k].re));
    f.extend(layout.pq.iter().map(|&k| s[k].im - spec[k].im));
    f
}

fn inf_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Jacobian of the P/Q mismatch with respect to (θ, |V|), assembled from
/// the standard complex derivative expressions
///   ∂S/∂θ  = j·diag(V)·conj(diag(I) − Y·diag(V))
///   ∂S/∂|V| = diag(V)·conj(Y·diag(V/|V|)) + conj(diag(I))·diag(V/|V|)
fn jacobian(
    ybus: &AdmittanceMatrix,
    v: &[Complex64],
    current: &[Complex64],
    layout: &Layout,
) -> Vec<Triplet<usize, usize, f64>> {
    let mut trip = Vec::with_capacity(4 * ybus.nnz());
    let j = Complex64::new(0.0, 1.0);
    for i in 0..v.len() {
        let p_row = layout.angle_col[i];
        let q_row = layout.mag_col[i];
        if p_row.is_none() && q_row.is_none() {
            continue;
        }
        let vi = v[i];
        let vnorm_i = vi / vi.norm();
        for (col, y) in ybus.row(i) {
            let mut ds_da = -j * vi * (y * v[col]).conj();
            let mut ds_dm = vi * (y * (v[col] / v[col].norm())).conj();
            if col == i {
                ds_da += j * vi * current[i].conj();
                ds_dm += current[i].conj() * vnorm_i;
            }
            if let Some(c) = layout.angle_col[col] {
                if let Some(r) = p_row {
                    trip.push(Triplet::new(r, c, ds_da.re));
                }
                if let Some(r) = q_row {
                    trip.push(Triplet::new(r, c, ds_da.im));
                }
            }
            if let Some(c) = layout.mag_col[col] {
                if let Some(r) = p_row {
                    trip.push(Triplet::new(r, c, ds_dm.re));
                }
                if let Some(r) = q_row {
                    trip.push(Triplet::new(r, c, ds_dm.im));
                }
            }
        }
    }
    trip
}

pub(super) fn solve(
    ybus: &AdmittanceMatrix,
    base_mva: f64,
    inj: &InjectionSet,
    kinds: &[BusKind],
    mut vm: Vec<f64>,
    mut va: Vec<f64>,
    opts: &SolveOptions,
) -> Result<NewtonState, PowerFlowError> {
    let layout = Layout::new(kinds);
    let spec: Vec<Complex64> = inj
        .p_net
        .iter()
        .zip(&inj.q_net)
        .map(|(&p, &q)| Complex64::new(p, q) / base_mva)
        .collect();
    for (k, kind) in kinds.iter().enumerate() {
        if *kind != BusKind::PQ {
            vm[k] = inj.v_set[k];
        }
    }

    let mut symbolic: Option<SymbolicLu<usize>> = None;
    let mut iterations = 0;
    loop {
        let v = phasors(&vm, &va);
        let current = ybus.mul_vec(&v);
        let s: Vec<Complex64> = v.iter().zip(&current).map(|(v, i)| v * i.conj()).collect();
        let f = residual(&s, &spec, &layout);
        let norm = inf_norm(&f);
        if norm <= opts.tol {
            return Ok(NewtonState {
                vm,
                va,
                iterations,
                max_mismatch: norm,
            });
        }
        if iterations >= opts.max_iter || !norm.is_finite() || norm > 1e10 {
            return Err(non_convergence(vm, va, kinds, iterations, norm));
        }

        let dim = layout.dim();
        let trip = jacobian(ybus, &v, &current, &layout);
        let jac = SparseColMat::<usize, f64>::try_new_from_triplets(dim, dim, &trip)
            .map_err(|_| PowerFlowError::SingularJacobian { iteration: iterations })?;
        let sym = match &symbolic {
            Some(sym) => sym.clone(),
            None => {
                let sym = SymbolicLu::try_new(jac.symbolic())
                    .map_err(|_| PowerFlowError::SingularJacobian { iteration: iterations })?;
                symbolic = Some(sym.clone());
                sym
            }
        };
        let lu = Lu::try_new_with_symbolic(sym, jac.as_ref())
            .map_err(|_| PowerFlowError::SingularJacobian { iteration: iterations })?;
        let rhs = Col::<f64>::from_fn(dim, |k| -f[k]);
        let dx = lu.solve(&rhs);
        if (0..dim).any(|k| !dx[k].is_finite()) {
            return Err(PowerFlowError::SingularJacobian { iteration: iterations });
        }
        for (c, &k) in layout.pvpq.iter().enumerate() {
            va[k] += dx[c];
        }
        let off = layout.pvpq.len();
        for (c, &k) in layout.pq.iter().enumerate() {
            vm[k] += dx[off + c];
        }
        iterations += 1;
    }
}

fn non_convergence(
    vm: Vec<f64>,
    va: Vec<f64>,
    kinds: &[BusKind],
    iterations: usize,
    norm: f64,
) -> PowerFlowError {
    let n = vm.len();
    PowerFlowError::NonConvergence {
        iterations,
        max_mismatch: norm,
        last: Box::new(PowerFlowSolution {
            vm,
            va,
            qg: vec![0.0; n],
            kinds: kinds.to_vec(),
            converged: false,
            iterations,
            max_mismatch: norm,
            pv_to_pq_switches: Vec::new(),
        }),
    }
}
