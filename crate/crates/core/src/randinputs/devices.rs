use serde::{Deserialize, Serialize};

/// Piecewise-linear wind turbine curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindTurbine {
    /// Cut-in, rated and cut-out speeds, m/s.
    pub v_in: f64,
    pub v_rated: f64,
    pub v_out: f64,
    /// Rated output, MW.
    pub rated_mw: f64,
}

/// Photovoltaic plant with a quadratic low-irradiance region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolarPlant {
    /// Certain-point and standard irradiance, W/m².
    pub r_c: f64,
    pub r_std: f64,
    /// Rated output, MW.
    pub rated_mw: f64,
}

impl WindTurbine {
    pub fn is_valid(&self) -> bool {
        0.0 <= self.v_in
            && self.v_in < self.v_rated
            && self.v_rated < self.v_out
            && self.rated_mw >= 0.0
    }

    /// Active output in MW at wind speed `v`.
    pub fn power(&self, v: f64) -> f64 {
        if v <= self.v_in || v > self.v_out {
            0.0
        } else if v <= self.v_rated {
            (v - self.v_in) / (self.v_rated - self.v_in) * self.rated_mw
        } else {
            self.rated_mw
        }
    }
}

impl SolarPlant {
    pub fn is_valid(&self) -> bool {
        0.0 < self.r_c && self.r_c < self.r_std && self.rated_mw >= 0.0
    }

    /// Active output in MW at irradiance `r`.
    pub fn power(&self, r: f64) -> f64 {
        let r = r.max(0.0);
        if r < self.r_c {
            r * r / (self.r_c * self.r_std) * self.rated_mw
        } else if r <= self.r_std {
            r / self.r_std * self.rated_mw
        } else {
            self.rated_mw
        }
    }
}
