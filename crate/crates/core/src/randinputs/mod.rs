//! Random inputs: marginals of wind speed, irradiance and load, device
//! curves turning them into injections, Latin hypercube sampling, and the
//! Nataf transformation between independent standard-space variables and
//! correlated physical inputs.

mod config;
mod devices;
mod lhs;
mod marginal;
mod nataf;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::casedata::NetworkCase;
use crate::powerflow::InjectionSet;

pub use config::{CorrelationConfig, LoadTemplate, UncertaintyConfig};
pub use devices::{SolarPlant, WindTurbine};
pub use lhs::lhs_sample;
pub use marginal::{phi, phi_inv, Marginal, NORMAL_CLAMP};
pub use nataf::{
    build_nataf, build_nataf_with, gaussian_correlation, induced_correlation, to_physical,
    NatafModel,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InputError {
    #[error("invalid marginal parameters: {0}")]
    InvalidMarginal(String),
    #[error("channel '{id}': {reason}")]
    InvalidChannel { id: String, reason: String },
    #[error("duplicate channel id '{0}'")]
    DuplicateChannel(String),
    #[error("channel '{channel}' references unknown bus {bus}")]
    UnknownBus { channel: String, bus: i64 },
    #[error("invalid correlation matrix: {0}")]
    BadCorrelation(String),
    #[error("Gaussian-space correlation matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("target correlation {target} outside the reachable range [{:.4}, {:.4}]", reachable.0, reachable.1)]
    RootNotBracketed { target: f64, reachable: (f64, f64) },
    #[error("uncertainty config: {0}")]
    Config(String),
}

fn one() -> f64 {
    1.0
}

/// What a random input represents and where it enters the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelKind {
    /// Wind speed feeding a turbine group, injected at fixed power factor.
    Wind {
        bus: i64,
        #[serde(flatten)]
        turbine: WindTurbine,
        #[serde(default = "one")]
        power_factor: f64,
    },
    /// Irradiance feeding a PV plant with zero reactive output.
    Solar {
        bus: i64,
        #[serde(flatten)]
        plant: SolarPlant,
    },
    /// Active load at a bus. Reactive load follows `power_factor` when
    /// given, else the base-case Q/P ratio.
    Load {
        bus: i64,
        #[serde(default)]
        power_factor: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelGroup {
    Wind,
    Solar,
    Load,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputChannel {
    pub id: String,
    #[serde(flatten)]
    pub kind: ChannelKind,
    pub marginal: Marginal,
}

impl InputChannel {
    pub fn bus(&self) -> i64 {
        match self.kind {
            ChannelKind::Wind { bus, .. }
            | ChannelKind::Solar { bus, .. }
            | ChannelKind::Load { bus, .. } => bus,
        }
    }

    pub fn group(&self) -> ChannelGroup {
        match self.kind {
            ChannelKind::Wind { .. } => ChannelGroup::Wind,
            ChannelKind::Solar { .. } => ChannelGroup::Solar,
            ChannelKind::Load { .. } => ChannelGroup::Load,
        }
    }

    pub fn validate(&self) -> Result<(), InputError> {
        let bad = |reason: &str| InputError::InvalidChannel {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        self.marginal.validate()?;
        let pf_ok = |pf: f64| pf > 0.0 && pf <= 1.0;
        match &self.kind {
            ChannelKind::Wind {
                turbine,
                power_factor,
                ..
            } => {
                if !turbine.is_valid() {
                    return Err(bad("wind speeds must satisfy v_in < v_rated < v_out"));
                }
                if !pf_ok(*power_factor) {
                    return Err(bad("power factor must lie in (0, 1]"));
                }
            }
            ChannelKind::Solar { plant, .. } => {
                if !plant.is_valid() {
                    return Err(bad("irradiance points must satisfy 0 < r_c < r_std"));
                }
            }
            ChannelKind::Load { power_factor, .. } => {
                if power_factor.is_some_and(|pf| !pf_ok(pf)) {
                    return Err(bad("power factor must lie in (0, 1]"));
                }
            }
        }
        Ok(())
    }

    /// Active (MW) and reactive (Mvar) power delivered at physical value `u`.
    fn device_output(&self, u: f64) -> (f64, f64) {
        match &self.kind {
            ChannelKind::Wind {
                turbine,
                power_factor,
                ..
            } => {
                let p = turbine.power(u.max(0.0));
                (p, p * power_factor.acos().tan())
            }
            ChannelKind::Solar { plant, .. } => (plant.power(u), 0.0),
            ChannelKind::Load { .. } => (0.0, 0.0),
        }
    }
}

/// Ordered random inputs with their physical-space correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomInputSpec {
    pub channels: Vec<InputChannel>,
    pub rho: DMatrix<f64>,
}

impl RandomInputSpec {
    pub fn new(channels: Vec<InputChannel>, rho: DMatrix<f64>) -> Result<Self, InputError> {
        let n = channels.len();
        let mut ids = std::collections::HashSet::new();
        for ch in &channels {
            ch.validate()?;
            if !ids.insert(ch.id.as_str()) {
                return Err(InputError::DuplicateChannel(ch.id.clone()));
            }
        }
        if rho.nrows() != n || rho.ncols() != n {
            return Err(InputError::BadCorrelation(format!(
                "expected {n}×{n}, got {}×{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        for i in 0..n {
            if rho[(i, i)] != 1.0 {
                return Err(InputError::BadCorrelation(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..i {
                if (rho[(i, j)] - rho[(j, i)]).abs() > 1e-12 {
                    return Err(InputError::BadCorrelation(format!("not symmetric at ({i}, {j})")));
                }
                if rho[(i, j)].abs() >= 1.0 {
                    return Err(InputError::BadCorrelation(format!("|ρ| ≥ 1 at ({i}, {j})")));
                }
            }
        }
        if rho.clone().cholesky().is_none() {
            return Err(InputError::BadCorrelation("not positive definite".into()));
        }
        Ok(RandomInputSpec { channels, rho })
    }

    /// Independent inputs.
    pub fn independent(channels: Vec<InputChannel>) -> Result<Self, InputError> {
        let n = channels.len();
        Self::new(channels, DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    /// Marginals of the standard-space variables ξ.
    pub fn standard_marginals(&self) -> Vec<Marginal> {
        self.channels.iter().map(|c| c.marginal.standard()).collect()
    }

    /// Map uniform samples (rows in (0,1)^n) to standard space.
    pub fn uniform_to_standard(&self, u: &DMatrix<f64>) -> DMatrix<f64> {
        let std = self.standard_marginals();
        DMatrix::from_fn(u.nrows(), u.ncols(), |r, c| std[c].quantile(u[(r, c)]))
    }

    /// `m` independent draws in standard space; column `c` comes from its
    /// own stream `(seed, "standard-sample", c)`.
    pub fn sample_standard(&self, m: usize, seed: u64) -> DMatrix<f64> {
        let std = self.standard_marginals();
        let mut out = DMatrix::zeros(m, std.len());
        for (c, marg) in std.iter().enumerate() {
            let mut rng = crate::rng::stream(seed, "standard-sample", c as u64);
            for v in out.column_mut(c).iter_mut() {
                *v = marg.sample(&mut rng);
            }
        }
        out
    }

    /// The physical input vector with every channel at its mean.
    pub fn mean_point(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.marginal.mean()).collect()
    }

    pub fn injection_map(&self, case: &NetworkCase) -> Result<InjectionMap, InputError> {
        InjectionMap::new(case, self)
    }
}

#[derive(Debug, Clone)]
struct ChannelTarget {
    bus: usize,
    base_pd: f64,
    base_qd: f64,
}

/// Precomputed mapping from a physical input vector to bus injections.
#[derive(Debug, Clone)]
pub struct InjectionMap {
    base: InjectionSet,
    channels: Vec<InputChannel>,
    targets: Vec<ChannelTarget>,
}

impl InjectionMap {
    pub fn new(case: &NetworkCase, spec: &RandomInputSpec) -> Result<Self, InputError> {
        let mut load_buses = std::collections::HashSet::new();
        let targets = spec
            .channels
            .iter()
            .map(|ch| {
                let bus = case.bus_index(ch.bus()).ok_or_else(|| InputError::UnknownBus {
                    channel: ch.id.clone(),
                    bus: ch.bus(),
                })?;
                if ch.group() == ChannelGroup::Load && !load_buses.insert(bus) {
                    return Err(InputError::InvalidChannel {
                        id: ch.id.clone(),
                        reason: format!("bus {} already has a load channel", ch.bus()),
                    });
                }
                Ok(ChannelTarget {
                    bus,
                    base_pd: case.buses[bus].pd,
                    base_qd: case.buses[bus].qd,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(InjectionMap {
            base: InjectionSet::from_case(case),
            channels: spec.channels.clone(),
            targets,
        })
    }

    /// Injections for one physical input vector `u`.
    pub fn apply(&self, u: &[f64]) -> InjectionSet {
        let mut inj = self.base.clone();
        for ((ch, t), &x) in self.channels.iter().zip(&self.targets).zip(u) {
            match ch.kind {
                ChannelKind::Load { power_factor, .. } => {
                    let q = match power_factor {
                        Some(pf) => x * pf.acos().tan(),
                        None if t.base_pd != 0.0 => x * t.base_qd / t.base_pd,
                        None => t.base_qd,
                    };
                    inj.p_net[t.bus] += t.base_pd - x;
                    inj.q_net[t.bus] += t.base_qd - q;
                }
                _ => {
                    let (p, q) = ch.device_output(x);
                    inj.p_net[t.bus] += p;
                    inj.q_net[t.bus] += q;
                }
            }
        }
        inj
    }
}

/// Injections of `case` with the random inputs at physical values `u`.
pub fn apply_to_case(
    case: &NetworkCase,
    spec: &RandomInputSpec,
    u: &[f64],
) -> Result<InjectionSet, InputError> {
    Ok(InjectionMap::new(case, spec)?.apply(u))
}

#[cfg(test)]
mod tests;
