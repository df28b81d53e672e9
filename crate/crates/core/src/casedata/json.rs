use serde::{Deserialize, Serialize};

use super::{Branch, Bus, BusKind, CaseError, Generator, NetworkCase, Status};

#[derive(Serialize, Deserialize)]
struct CaseFile {
    base_mva: f64,
    buses: Vec<BusRecord>,
    branches: Vec<BranchRecord>,
    generators: Vec<GenRecord>,
}

#[derive(Serialize, Deserialize)]
struct BusRecord {
    id: i64,
    kind: BusKind,
    #[serde(rename = "Pd", default)]
    pd: f64,
    #[serde(rename = "Qd", default)]
    qd: f64,
    #[serde(rename = "Gs", default)]
    gs: f64,
    #[serde(rename = "Bs", default)]
    bs: f64,
    #[serde(rename = "baseKV", default)]
    base_kv: f64,
    #[serde(rename = "Vm0", default = "one")]
    vm0: f64,
    /// Degrees.
    #[serde(rename = "Va0", default)]
    va0: f64,
    #[serde(rename = "Vmin", default = "vmin_default")]
    vmin: f64,
    #[serde(rename = "Vmax", default = "vmax_default")]
    vmax: f64,
}

#[derive(Serialize, Deserialize)]
struct BranchRecord {
    from: i64,
    to: i64,
    r: f64,
    x: f64,
    #[serde(default)]
    b: f64,
    #[serde(default = "one")]
    tap: f64,
    /// Degrees.
    #[serde(default)]
    shift: f64,
    #[serde(rename = "rateA", default)]
    rate_a: f64,
    #[serde(default = "on")]
    status: Status,
}

#[derive(Serialize, Deserialize)]
struct GenRecord {
    bus: i64,
    #[serde(rename = "Pg", default)]
    pg: f64,
    #[serde(rename = "Qg", default)]
    qg: f64,
    #[serde(rename = "Qmin", default = "neg_big")]
    qmin: f64,
    #[serde(rename = "Qmax", default = "big")]
    qmax: f64,
    #[serde(rename = "Vset", default = "one")]
    vset: f64,
    #[serde(default = "on")]
    status: Status,
}

fn one() -> f64 {
    1.0
}
fn vmin_default() -> f64 {
    0.9
}
fn vmax_default() -> f64 {
    1.1
}
fn big() -> f64 {
    9999.0
}
fn neg_big() -> f64 {
    -9999.0
}
fn on() -> Status {
    Status::On
}

pub fn case_from_json(text: &str) -> Result<NetworkCase, CaseError> {
    let file: CaseFile = serde_json::from_str(text).map_err(|e| CaseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let buses = file
        .buses
        .into_iter()
        .map(|b| Bus {
            id: b.id,
            kind: b.kind,
            pd: b.pd,
            qd: b.qd,
            gs: b.gs,
            bs: b.bs,
            base_kv: b.base_kv,
            vm0: b.vm0,
            va0: b.va0.to_radians(),
            vmin: b.vmin,
            vmax: b.vmax,
        })
        .collect();
    let branches = file
        .branches
        .into_iter()
        .map(|b| Branch {
            from: b.from,
            to: b.to,
            r: b.r,
            x: b.x,
            b: b.b,
            tap: b.tap,
            shift: b.shift.to_radians(),
            rate_a: b.rate_a,
            status: b.status,
        })
        .collect();
    let generators = file
        .generators
        .into_iter()
        .map(|g| Generator {
            bus: g.bus,
            pg: g.pg,
            qg: g.qg,
            qmin: g.qmin,
            qmax: g.qmax,
            vset: g.vset,
            status: g.status,
        })
        .collect();
    NetworkCase::new(file.base_mva, buses, branches, generators)
}

pub fn case_to_json(case: &NetworkCase) -> String {
    let file = CaseFile {
        base_mva: case.base_mva,
        buses: case
            .buses
            .iter()
            .map(|b| BusRecord {
                id: b.id,
                kind: b.kind,
                pd: b.pd,
                qd: b.qd,
                gs: b.gs,
                bs: b.bs,
                base_kv: b.base_kv,
                vm0: b.vm0,
                va0: b.va0.to_degrees(),
                vmin: b.vmin,
                vmax: b.vmax,
            })
            .collect(),
        branches: case
            .branches
            .iter()
            .map(|b| BranchRecord {
                from: b.from,
                to: b.to,
                r: b.r,
                x: b.x,
                b: b.b,
                tap: b.tap,
                shift: b.shift.to_degrees(),
                rate_a: b.rate_a,
                status: b.status,
            })
            .collect(),
        generators: case
            .generators
            .iter()
            .map(|g| GenRecord {
                bus: g.bus,
                pg: g.pg,
                qg: g.qg,
                qmin: g.qmin,
                qmax: g.qmax,
                vset: g.vset,
                status: g.status,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("case serializes")
}
