use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{PowerFlowError, PowerFlowModel, PowerFlowSolution};

/// Branch end at which a flow is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum End {
    #[default]
    From,
    To,
}

/// Identifier of a scalar power-flow output.
///
/// Text forms: `VM:<bus>`, `QG:<bus>`, and `SF:<from>-<to>[#<circuit>][:from|:to]`.
/// Flows are apparent power at the named end, magnitudes in p.u.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ResponseId {
    Vm(i64),
    Qg(i64),
    Sf {
        from: i64,
        to: i64,
        circuit: usize,
        end: End,
    },
}

impl fmt::Display for ResponseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResponseId::Vm(b) => write!(f, "VM:{b}"),
            ResponseId::Qg(b) => write!(f, "QG:{b}"),
            ResponseId::Sf {
                from,
                to,
                circuit,
                end,
            } => {
                write!(f, "SF:{from}-{to}")?;
                if *circuit != 1 {
                    write!(f, "#{circuit}")?;
                }
                if *end == End::To {
                    write!(f, ":to")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ResponseId {
    type Err = PowerFlowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PowerFlowError::UnknownResponse(s.to_string());
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind.to_ascii_uppercase().as_str() {
            "VM" => rest.parse().map(ResponseId::Vm).map_err(|_| bad()),
            "QG" => rest.parse().map(ResponseId::Qg).map_err(|_| bad()),
            "SF" => {
                let (pair, end) = match rest.rsplit_once(':') {
                    Some((p, e)) => match e.to_ascii_lowercase().as_str() {
                        "from" => (p, End::From),
                        "to" => (p, End::To),
                        _ => return Err(bad()),
                    },
                    None => (rest, End::From),
                };
                let (pair, circuit) = match pair.split_once('#') {
                    Some((p, c)) => (p, c.parse::<usize>().map_err(|_| bad())?),
                    None => (pair, 1),
                };
                if circuit == 0 {
                    return Err(bad());
                }
                let (a, b) = pair.split_once('-').ok_or_else(bad)?;
                Ok(ResponseId::Sf {
                    from: a.parse().map_err(|_| bad())?,
                    to: b.parse().map_err(|_| bad())?,
                    circuit,
                    end,
                })
            }
            _ => Err(bad()),
        }
    }
}

impl Serialize for ResponseId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ResponseId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy)]
enum Target {
    Vm(usize),
    Qg(usize),
    /// Position in the admittance branch list (None for an out-of-service
    /// branch) and whether the flow is read at the branch's stored from end.
    Sf(Option<usize>, bool),
}

/// Responses resolved against a case.
#[derive(Debug, Clone)]
pub struct ResponseSpec {
    ids: Vec<ResponseId>,
    targets: Vec<Target>,
}

impl ResponseSpec {
    pub fn new(model: &PowerFlowModel, ids: &[ResponseId]) -> Result<Self, PowerFlowError> {
        let case = model.case();
        let unknown = |id: &ResponseId| PowerFlowError::UnknownResponse(id.to_string());
        let targets = ids
            .iter()
            .map(|id| match *id {
                ResponseId::Vm(b) => case.bus_index(b).map(Target::Vm).ok_or_else(|| unknown(id)),
                ResponseId::Qg(b) => case.bus_index(b).map(Target::Qg).ok_or_else(|| unknown(id)),
                ResponseId::Sf {
                    from,
                    to,
                    circuit,
                    end,
                } => {
                    // Accept either orientation; a reversed pair swaps the end.
                    let (k, at_from) = match case.branch_index(from, to, circuit) {
                        Some(k) => (k, end == End::From),
                        None => (
                            case.branch_index(to, from, circuit).ok_or_else(|| unknown(id))?,
                            end == End::To,
                        ),
                    };
                    let pos = model.ybus().branches().iter().position(|b| b.branch == k);
                    Ok(Target::Sf(pos, at_from))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(ResponseSpec {
            ids: ids.to_vec(),
            targets,
        })
    }

    pub fn ids(&self) -> &[ResponseId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Evaluate the responses of `spec` on a solved state, all in p.u.
pub fn extract_responses(
    model: &PowerFlowModel,
    spec: &ResponseSpec,
    sol: &PowerFlowSolution,
) -> Vec<f64> {
    let base = model.case().base_mva;
    let branches = model.ybus().branches();
    spec.targets
        .iter()
        .map(|t| match *t {
            Target::Vm(k) => sol.vm[k],
            Target::Qg(k) => sol.qg[k] / base,
            Target::Sf(None, _) => 0.0,
            Target::Sf(Some(pos), at_from) => {
                let br = &branches[pos];
                let vf = Complex64::from_polar(sol.vm[br.from], sol.va[br.from]);
                let vt = Complex64::from_polar(sol.vm[br.to], sol.va[br.to]);
                let s = if at_from {
                    vf * (br.yff * vf + br.yft * vt).conj()
                } else {
                    vt * (br.ytf * vf + br.ytt * vt).conj()
                };
                s.norm()
            }
        })
        .collect()
}
