//! Network case model, case-file parsing and bus admittance assembly.
//!
//! Two on-disk formats are understood: the MATPOWER `mpc` text subset
//! (`baseMVA`, `bus`, `gen`, `branch`) and a JSON schema mirroring the
//! types below. Angles are held in radians; both file formats use degrees.

mod admittance;
mod json;
mod matpower;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use admittance::{build_admittance, AdmittanceMatrix, BranchAdmittance};
pub use json::{case_from_json, case_to_json};
pub use matpower::{case_from_matpower, case_to_matpower};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CaseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid case: {0}")]
    Semantic(String),
}

impl CaseError {
    fn semantic(msg: impl Into<String>) -> Self {
        CaseError::Semantic(msg.into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BusKind {
    Slack,
    PV,
    PQ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    On,
    Off,
}

impl Status {
    pub fn is_on(self) -> bool {
        self == Status::On
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: i64,
    pub kind: BusKind,
    /// Active load, MW.
    pub pd: f64,
    /// Reactive load, Mvar.
    pub qd: f64,
    /// Shunt conductance, MW consumed at 1 p.u.
    pub gs: f64,
    /// Shunt susceptance, Mvar injected at 1 p.u.
    pub bs: f64,
    pub base_kv: f64,
    pub vm0: f64,
    /// Initial angle, radians.
    pub va0: f64,
    pub vmin: f64,
    pub vmax: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: i64,
    pub to: i64,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, p.u.
    pub b: f64,
    /// Off-nominal turns ratio; 1.0 for lines.
    pub tap: f64,
    /// Phase shift, radians.
    pub shift: f64,
    /// Long-term MVA rating, 0 when unlimited.
    pub rate_a: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: i64,
    pub pg: f64,
    pub qg: f64,
    pub qmin: f64,
    pub qmax: f64,
    pub vset: f64,
    pub status: Status,
}

/// Deterministic grid model. Construct through [`NetworkCase::new`] so the
/// structural invariants are checked once.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    index: HashMap<i64, usize>,
}

impl NetworkCase {
    pub fn new(
        base_mva: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
    ) -> Result<Self, CaseError> {
        if !(base_mva > 0.0) {
            return Err(CaseError::semantic(format!(
                "baseMVA must be positive, got {base_mva}"
            )));
        }
        if buses.is_empty() {
            return Err(CaseError::semantic("case has no buses"));
        }
        let mut index = HashMap::with_capacity(buses.len());
        for (k, bus) in buses.iter().enumerate() {
            if index.insert(bus.id, k).is_some() {
                return Err(CaseError::semantic(format!("duplicate bus id {}", bus.id)));
            }
            if bus.vmin > bus.vmax {
                return Err(CaseError::semantic(format!(
                    "bus {}: Vmin {} exceeds Vmax {}",
                    bus.id, bus.vmin, bus.vmax
                )));
            }
            if !(bus.vm0 > 0.0) {
                return Err(CaseError::semantic(format!(
                    "bus {}: initial voltage magnitude must be positive",
                    bus.id
                )));
            }
        }
        let slacks: Vec<i64> = buses
            .iter()
            .filter(|b| b.kind == BusKind::Slack)
            .map(|b| b.id)
            .collect();
        match slacks.len() {
            0 => return Err(CaseError::semantic("no slack bus")),
            1 => {}
            _ => {
                let ids: Vec<String> = slacks.iter().map(i64::to_string).collect();
                return Err(CaseError::semantic(format!(
                    "multiple slack buses: {}",
                    ids.join(", ")
                )));
            }
        }
        for (k, br) in branches.iter().enumerate() {
            let tag = format!("branch {} ({}-{})", k + 1, br.from, br.to);
            for end in [br.from, br.to] {
                if !index.contains_key(&end) {
                    return Err(CaseError::semantic(format!(
                        "{tag} references unknown bus {end}"
                    )));
                }
            }
            if br.from == br.to {
                return Err(CaseError::semantic(format!("{tag} connects a bus to itself")));
            }
            if br.status.is_on() && br.x == 0.0 {
                return Err(CaseError::semantic(format!("{tag} has zero reactance")));
            }
            if !(br.tap > 0.0) {
                return Err(CaseError::semantic(format!("{tag} has non-positive tap")));
            }
        }
        for (k, g) in generators.iter().enumerate() {
            if !index.contains_key(&g.bus) {
                return Err(CaseError::semantic(format!(
                    "generator {} references unknown bus {}",
                    k + 1,
                    g.bus
                )));
            }
            if g.qmin > g.qmax {
                return Err(CaseError::semantic(format!(
                    "generator {} at bus {}: Qmin {} exceeds Qmax {}",
                    k + 1,
                    g.bus,
                    g.qmin,
                    g.qmax
                )));
            }
        }
        let with_gen: BTreeSet<i64> = generators
            .iter()
            .filter(|g| g.status.is_on())
            .map(|g| g.bus)
            .collect();
        for bus in &buses {
            if bus.kind == BusKind::PV && !with_gen.contains(&bus.id) {
                return Err(CaseError::semantic(format!(
                    "PV bus {} has no in-service generator",
                    bus.id
                )));
            }
        }
        let case = NetworkCase {
            base_mva,
            buses,
            branches,
            generators,
            index,
        };
        case.check_connected()?;
        Ok(case)
    }

    fn check_connected(&self) -> Result<(), CaseError> {
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for br in self.branches.iter().filter(|b| b.status.is_on()) {
            let (f, t) = (self.index[&br.from], self.index[&br.to]);
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        let islanded: Vec<String> = self
            .buses
            .iter()
            .zip(&seen)
            .filter(|(_, &s)| !s)
            .map(|(b, _)| b.id.to_string())
            .collect();
        if islanded.is_empty() {
            Ok(())
        } else {
            Err(CaseError::semantic(format!(
                "network is disconnected; buses not reachable from bus {}: {}",
                self.buses[0].id,
                islanded.join(", ")
            )))
        }
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    /// Internal index of a bus id.
    pub fn bus_index(&self, id: i64) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    /// Index of the `circuit`-th (1-based) branch joining `from` and `to`,
    /// in the given orientation.
    pub fn branch_index(&self, from: i64, to: i64, circuit: usize) -> Option<usize> {
        self.branches
            .iter()
            .enumerate()
            .filter(|(_, b)| b.from == from && b.to == to)
            .nth(circuit.checked_sub(1)?)
            .map(|(k, _)| k)
    }

    /// In-service generators aggregated per bus index: (Pg MW, Qmin, Qmax, Vset).
    pub fn bus_generation(&self) -> Vec<Option<AggregatedGen>> {
        let mut out: Vec<Option<AggregatedGen>> = vec![None; self.buses.len()];
        for g in self.generators.iter().filter(|g| g.status.is_on()) {
            let k = self.index[&g.bus];
            let slot = out[k].get_or_insert(AggregatedGen {
                pg: 0.0,
                qmin: 0.0,
                qmax: 0.0,
                vset: g.vset,
            });
            slot.pg += g.pg;
            slot.qmin += g.qmin;
            slot.qmax += g.qmax;
        }
        out
    }

    /// Copy with the listed buses' loads multiplied by `factor`.
    pub fn with_scaled_loads(&self, bus_ids: &[i64], factor: f64) -> Result<Self, CaseError> {
        let mut buses = self.buses.clone();
        for id in bus_ids {
            let k = self
                .bus_index(*id)
                .ok_or_else(|| CaseError::semantic(format!("unknown bus {id}")))?;
            buses[k].pd *= factor;
            buses[k].qd *= factor;
        }
        NetworkCase::new(
            self.base_mva,
            buses,
            self.branches.clone(),
            self.generators.clone(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatedGen {
    pub pg: f64,
    pub qmin: f64,
    pub qmax: f64,
    pub vset: f64,
}

/// Parse a case from text, detecting JSON by its leading brace.
pub fn parse_case(text: &str) -> Result<NetworkCase, CaseError> {
    if text.trim_start().starts_with('{') {
        case_from_json(text)
    } else {
        case_from_matpower(text)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const TWO_BUS: &str = "\
function mpc = two_bus
mpc.baseMVA = 100;
mpc.bus = [
    1 3 0  0  0 0 1 1 0 345 1 1.1 0.9;
    2 1 50 20 0 0 1 1 0 345 1 1.1 0.9;
];
mpc.gen = [
    1 0 0 300 -300 1.0 100 1 250 0;
];
mpc.branch = [
    1 2 0 0.1 0 0 0 0 0 0 1 -360 360;
];
";

    #[test]
    fn minimal_two_bus() {
        let case = parse_case(TWO_BUS).unwrap();
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.branches.len(), 1);
        assert_eq!(case.generators.len(), 1);
        assert_eq!(case.branches[0].tap, 1.0);
        assert_eq!(case.buses[1].kind, BusKind::PQ);
    }

    #[test]
    fn two_slacks_named() {
        let text = TWO_BUS.replace("2 1 50 20", "2 3 50 20");
        let err = parse_case(&text).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, CaseError::Semantic(_)));
        assert!(msg.contains("1, 2"), "{msg}");
    }

    #[test]
    fn no_slack() {
        let text = TWO_BUS.replace("1 3 0  0", "1 1 0  0");
        let err = parse_case(&text).unwrap_err();
        assert!(err.to_string().contains("no slack"));
    }

    #[test]
    fn disconnected_is_reported() {
        let text = TWO_BUS.replace("0 0 0 0 1 -360 360", "0 0 0 0 0 -360 360");
        let err = parse_case(&text).unwrap_err();
        assert!(err.to_string().contains("disconnected"), "{err}");
        assert!(err.to_string().contains('2'));
    }

    #[test]
    fn duplicate_bus_ids() {
        let text = TWO_BUS.replace("2 1 50 20", "1 1 50 20");
        let err = parse_case(&text).unwrap_err();
        assert!(err.to_string().contains("duplicate bus id 1"), "{err}");
    }

    #[test]
    fn pv_without_generator() {
        let text = TWO_BUS.replace("2 1 50 20", "2 2 50 20");
        let err = parse_case(&text).unwrap_err();
        assert!(err.to_string().contains("PV bus 2"), "{err}");
    }

    #[test]
    fn scaled_loads() {
        let case = parse_case(TWO_BUS).unwrap();
        let scaled = case.with_scaled_loads(&[2], 1.1).unwrap();
        assert!((scaled.buses[1].pd - 55.0).abs() < 1e-12);
        assert!((scaled.buses[1].qd - 22.0).abs() < 1e-12);
        assert!(case.with_scaled_loads(&[7], 1.1).is_err());
    }
}
