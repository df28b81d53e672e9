use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ChannelGroup, ChannelKind, InputChannel, InputError, Marginal, RandomInputSpec};
use crate::casedata::NetworkCase;

/// Normal load channels generated for every bus with positive active load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadTemplate {
    /// Standard deviation as a fraction of the base-case load.
    pub sigma_rel: f64,
    #[serde(default)]
    pub power_factor: Option<f64>,
    /// Buses left deterministic.
    #[serde(default)]
    pub exclude: Vec<i64>,
}

/// Either one coefficient per channel group (zero across groups) or an
/// explicit matrix in channel order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorrelationConfig {
    Matrix {
        matrix: Vec<Vec<f64>>,
    },
    Groups {
        #[serde(default)]
        wind: f64,
        #[serde(default)]
        solar: f64,
        #[serde(default)]
        load: f64,
    },
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        CorrelationConfig::Groups {
            wind: 0.0,
            solar: 0.0,
            load: 0.0,
        }
    }
}

/// On-disk description of the random inputs of a study (JSON or TOML).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyConfig {
    #[serde(default)]
    pub channels: Vec<InputChannel>,
    #[serde(default)]
    pub all_loads: Option<LoadTemplate>,
    #[serde(default)]
    pub correlation: CorrelationConfig,
}

impl UncertaintyConfig {
    /// Parse JSON when the text starts with `{`, TOML otherwise.
    pub fn parse(text: &str) -> Result<Self, InputError> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| InputError::Config(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| InputError::Config(e.to_string()))
        }
    }

    /// Exchange shape and scale of every Weibull marginal.
    pub fn swap_weibull(&mut self) {
        for ch in &mut self.channels {
            if let Marginal::Weibull { k, c } = ch.marginal {
                ch.marginal = Marginal::Weibull { k: c, c: k };
            }
        }
    }

    /// Expand templates against `case` and assemble the correlation matrix.
    /// Generated load channels follow the explicit ones, in case bus order.
    pub fn resolve(&self, case: &NetworkCase) -> Result<RandomInputSpec, InputError> {
        let mut channels = self.channels.clone();
        if let Some(t) = &self.all_loads {
            if !(t.sigma_rel > 0.0) {
                return Err(InputError::Config("all_loads.sigma_rel must be positive".into()));
            }
            let explicit: std::collections::HashSet<i64> = channels
                .iter()
                .filter(|c| c.group() == ChannelGroup::Load)
                .map(InputChannel::bus)
                .collect();
            for bus in &case.buses {
                if bus.pd > 0.0 && !explicit.contains(&bus.id) && !t.exclude.contains(&bus.id) {
                    channels.push(InputChannel {
                        id: format!("load{}", bus.id),
                        kind: ChannelKind::Load {
                            bus: bus.id,
                            power_factor: t.power_factor,
                        },
                        marginal: Marginal::Normal {
                            mu: bus.pd,
                            sigma: t.sigma_rel * bus.pd,
                        },
                    });
                }
            }
        }
        let n = channels.len();
        let rho = match &self.correlation {
            CorrelationConfig::Matrix { matrix } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(InputError::BadCorrelation(format!(
                        "matrix must be {n}×{n} to match the channel list"
                    )));
                }
                DMatrix::from_fn(n, n, |i, j| matrix[i][j])
            }
            CorrelationConfig::Groups { wind, solar, load } => DMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    return 1.0;
                }
                let (gi, gj) = (channels[i].group(), channels[j].group());
                if gi != gj {
                    return 0.0;
                }
                match gi {
                    ChannelGroup::Wind => *wind,
                    ChannelGroup::Solar => *solar,
                    ChannelGroup::Load => *load,
                }
            }),
        };
        RandomInputSpec::new(channels, rho)
    }
}
