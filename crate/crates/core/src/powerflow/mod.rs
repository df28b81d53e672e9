//! Deterministic AC power flow: polar Newton-Raphson with an outer loop that
//! retypes PV buses to PQ when their reactive output leaves its limits.

mod newton;
mod responses;

use thiserror::Error;

use crate::casedata::{build_admittance, AdmittanceMatrix, AggregatedGen, BusKind, NetworkCase};

pub use responses::{extract_responses, End, ResponseId, ResponseSpec};

#[derive(Debug, Error, Clone)]
pub enum PowerFlowError {
    #[error("Newton-Raphson did not converge after {iterations} iterations (max mismatch {max_mismatch:.3e} p.u.)")]
    NonConvergence {
        iterations: usize,
        max_mismatch: f64,
        last: Box<PowerFlowSolution>,
    },
    #[error("singular Jacobian at iteration {iteration}")]
    SingularJacobian { iteration: usize },
    #[error("reactive limits still violated after {passes} switching passes at buses {buses:?}")]
    OscillatingLimits { passes: usize, buses: Vec<i64> },
    #[error("injection set covers {got} buses, case has {expected}")]
    InjectionShape { expected: usize, got: usize },
    #[error("unknown response '{0}'")]
    UnknownResponse(String),
}

/// Specified bus injections, indexed by internal bus position.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSet {
    /// Net active injection (generation minus load), MW.
    pub p_net: Vec<f64>,
    /// Net reactive injection excluding PV/slack generator output, Mvar.
    pub q_net: Vec<f64>,
    /// Voltage magnitude setpoints, p.u.; used at PV and slack buses.
    pub v_set: Vec<f64>,
}

impl InjectionSet {
    /// Injections of the case as written: loads, scheduled generator
    /// output, and generator voltage setpoints.
    pub fn from_case(case: &NetworkCase) -> Self {
        let gens = case.bus_generation();
        let n = case.n_buses();
        let mut p_net = vec![0.0; n];
        let mut q_net = vec![0.0; n];
        let mut v_set = vec![0.0; n];
        for (k, bus) in case.buses.iter().enumerate() {
            p_net[k] = -bus.pd;
            q_net[k] = -bus.qd;
            v_set[k] = bus.vm0;
            if let Some(g) = gens[k] {
                p_net[k] += g.pg;
                if bus.kind == BusKind::PQ {
                    // Generators at PQ buses inject their scheduled Q.
                    q_net[k] += case
                        .generators
                        .iter()
                        .filter(|gen| gen.status.is_on() && gen.bus == bus.id)
                        .map(|gen| gen.qg)
                        .sum::<f64>();
                } else {
                    v_set[k] = g.vset;
                }
            }
        }
        InjectionSet { p_net, q_net, v_set }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Convergence threshold on the largest P/Q residual, p.u.
    pub tol: f64,
    pub max_iter: usize,
    /// Start from 1.0∠slack-angle (setpoints at PV buses) rather than the
    /// case's stored voltages.
    pub flat_start: bool,
    pub enforce_q_limits: bool,
    pub q_limit_passes: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-8,
            max_iter: 30,
            flat_start: true,
            enforce_q_limits: true,
            q_limit_passes: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    pub vm: Vec<f64>,
    /// Radians.
    pub va: Vec<f64>,
    /// Generator reactive output per bus, Mvar; zero at buses without
    /// in-service generation.
    pub qg: Vec<f64>,
    /// Bus types after reactive-limit switching.
    pub kinds: Vec<BusKind>,
    pub converged: bool,
    pub iterations: usize,
    pub max_mismatch: f64,
    pub pv_to_pq_switches: Vec<i64>,
}

/// A case prepared for repeated solves: admittance matrix and per-bus
/// aggregated generation are built once and shared read-only.
#[derive(Debug, Clone)]
pub struct PowerFlowModel {
    case: NetworkCase,
    ybus: AdmittanceMatrix,
    gens: Vec<Option<AggregatedGen>>,
}

/// Reactive tolerance, Mvar, below which a limit excursion is treated as
/// sitting on the boundary.
const Q_LIMIT_TOL: f64 = 1e-4;

impl PowerFlowModel {
    pub fn new(case: &NetworkCase) -> Self {
        PowerFlowModel {
            ybus: build_admittance(case),
            gens: case.bus_generation(),
            case: case.clone(),
        }
    }

    pub fn case(&self) -> &NetworkCase {
        &self.case
    }

    pub fn ybus(&self) -> &AdmittanceMatrix {
        &self.ybus
    }

    /// Full solve: Newton-Raphson, then reactive-limit enforcement when
    /// enabled in `opts`.
    pub fn solve(
        &self,
        inj: &InjectionSet,
        opts: &SolveOptions,
    ) -> Result<PowerFlowSolution, PowerFlowError> {
        let n = self.case.n_buses();
        if inj.p_net.len() != n || inj.q_net.len() != n || inj.v_set.len() != n {
            return Err(PowerFlowError::InjectionShape {
                expected: n,
                got: inj.p_net.len().min(inj.q_net.len()).min(inj.v_set.len()),
            });
        }
        let kinds: Vec<BusKind> = self.case.buses.iter().map(|b| b.kind).collect();
        let (vm0, va0) = self.initial_state(inj, opts.flat_start);
        let sol = self.newton(inj, &kinds, vm0, va0, opts)?;
        if opts.enforce_q_limits {
            self.enforce_q_limits(inj, sol, opts)
        } else {
            Ok(sol)
        }
    }

    fn initial_state(&self, inj: &InjectionSet, flat: bool) -> (Vec<f64>, Vec<f64>) {
        let slack = self.case.slack_index();
        let slack_angle = self.case.buses[slack].va0;
        self.case
            .buses
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let vm = match (b.kind, flat) {
                    (BusKind::PQ, true) => 1.0,
                    (BusKind::PQ, false) => b.vm0,
                    _ => inj.v_set[k],
                };
                let va = if flat { slack_angle } else { b.va0 };
                (vm, va)
            })
            .unzip()
    }

    fn newton(
        &self,
        inj: &InjectionSet,
        kinds: &[BusKind],
        vm: Vec<f64>,
        va: Vec<f64>,
        opts: &SolveOptions,
    ) -> Result<PowerFlowSolution, PowerFlowError> {
        let state = newton::solve(&self.ybus, self.case.base_mva, inj, kinds, vm, va, opts)?;
        Ok(self.finish(inj, kinds, state, &[]))
    }

    fn finish(
        &self,
        inj: &InjectionSet,
        kinds: &[BusKind],
        state: newton::NewtonState,
        fixed: &[(usize, f64)],
    ) -> PowerFlowSolution {
        let base = self.case.base_mva;
        let s = newton::bus_injections(&self.ybus, &state.vm, &state.va);
        let mut qg: Vec<f64> = (0..kinds.len())
            .map(|k| match (self.gens[k], kinds[k]) {
                (Some(_), BusKind::PV | BusKind::Slack) => s[k].im * base - inj.q_net[k],
                _ => 0.0,
            })
            .collect();
        for &(k, q) in fixed {
            qg[k] = q;
        }
        PowerFlowSolution {
            vm: state.vm,
            va: state.va,
            qg,
            kinds: kinds.to_vec(),
            converged: true,
            iterations: state.iterations,
            max_mismatch: state.max_mismatch,
            pv_to_pq_switches: fixed.iter().map(|&(k, _)| self.case.buses[k].id).collect(),
        }
    }

    /// Outer reactive-limit loop: any PV bus whose generator output leaves
    /// `[Qmin, Qmax]` becomes PQ with Q fixed at the violated limit, and the
    /// case is re-solved from the previous state. Buses are never switched
    /// back to PV.
    pub fn enforce_q_limits(
        &self,
        inj: &InjectionSet,
        sol: PowerFlowSolution,
        opts: &SolveOptions,
    ) -> Result<PowerFlowSolution, PowerFlowError> {
        let mut inj = inj.clone();
        let mut kinds = sol.kinds.clone();
        let mut fixed: Vec<(usize, f64)> = Vec::new();
        let mut sol = sol;
        let mut total_iterations = sol.iterations;
        for pass in 0..=opts.q_limit_passes {
            let mut violated = Vec::new();
            for (k, kind) in kinds.iter().enumerate() {
                if *kind != BusKind::PV {
                    continue;
                }
                let Some(g) = self.gens[k] else { continue };
                let q = sol.qg[k];
                if q > g.qmax + Q_LIMIT_TOL {
                    violated.push((k, g.qmax));
                } else if q < g.qmin - Q_LIMIT_TOL {
                    violated.push((k, g.qmin));
                }
            }
            if violated.is_empty() {
                sol.iterations = total_iterations;
                return Ok(sol);
            }
            if pass == opts.q_limit_passes {
                return Err(PowerFlowError::OscillatingLimits {
                    passes: pass,
                    buses: violated.iter().map(|&(k, _)| self.case.buses[k].id).collect(),
                });
            }
            for &(k, limit) in &violated {
                kinds[k] = BusKind::PQ;
                inj.q_net[k] += limit;
                fixed.push((k, limit));
            }
            let state = newton::solve(
                &self.ybus,
                self.case.base_mva,
                &inj,
                &kinds,
                sol.vm.clone(),
                sol.va.clone(),
                opts,
            )?;
            total_iterations += state.iterations;
            sol = self.finish(&inj, &kinds, state, &fixed);
        }
        unreachable!("loop returns on its final pass")
    }

    /// Largest bus power residual of a solution against the original
    /// injections (generator Q included), recomputed from the admittance
    /// matrix, p.u.
    pub fn mismatch(&self, inj: &InjectionSet, sol: &PowerFlowSolution) -> f64 {
        let base = self.case.base_mva;
        let slack = self.case.slack_index();
        let s = newton::bus_injections(&self.ybus, &sol.vm, &sol.va);
        let mut worst: f64 = 0.0;
        for (k, sk) in s.iter().enumerate() {
            if k != slack {
                worst = worst.max((sk.re - inj.p_net[k] / base).abs());
            }
            worst = worst.max((sk.im - (inj.q_net[k] + sol.qg[k]) / base).abs());
        }
        worst
    }
}

/// Convenience wrapper building a one-off model.
pub fn solve(
    case: &NetworkCase,
    inj: &InjectionSet,
    opts: &SolveOptions,
) -> Result<PowerFlowSolution, PowerFlowError> {
    PowerFlowModel::new(case).solve(inj, opts)
}

#[cfg(test)]
mod tests;
