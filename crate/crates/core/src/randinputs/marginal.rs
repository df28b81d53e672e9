use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::distribution::{
    Beta, Continuous, ContinuousCDF, Exp, Gamma, Normal, Uniform, Weibull,
};
use statrs::function::gamma::gamma;

use super::InputError;

/// Largest standard-normal score used when mapping between spaces; keeps
/// tail quantiles finite.
pub const NORMAL_CLAMP: f64 = 8.2;

/// Univariate marginal distribution of a random input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase")]
pub enum Marginal {
    Normal { mu: f64, sigma: f64 },
    /// Beta(alpha, beta) stretched onto [lo, hi].
    Beta { alpha: f64, beta: f64, lo: f64, hi: f64 },
    /// Shape `k`, scale `c`.
    Weibull { k: f64, c: f64 },
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Gamma { shape: f64, scale: f64 },
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Standard normal CDF.
pub fn phi(z: f64) -> f64 {
    std_normal().cdf(z)
}

/// Standard normal quantile.
pub fn phi_inv(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

impl Marginal {
    pub fn validate(&self) -> Result<(), InputError> {
        let ok = match *self {
            Marginal::Normal { mu, sigma } => mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
            Marginal::Beta { alpha, beta, lo, hi } => {
                alpha > 0.0 && beta > 0.0 && lo < hi && lo.is_finite() && hi.is_finite()
            }
            Marginal::Weibull { k, c } => k > 0.0 && c > 0.0 && k.is_finite() && c.is_finite(),
            Marginal::Uniform { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
            Marginal::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Marginal::Gamma { shape, scale } => {
                shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(InputError::InvalidMarginal(format!("{self:?}")))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Normal { mu, .. } => mu,
            Marginal::Beta { alpha, beta, lo, hi } => lo + (hi - lo) * alpha / (alpha + beta),
            Marginal::Weibull { k, c } => c * gamma(1.0 + 1.0 / k),
            Marginal::Uniform { lo, hi } => 0.5 * (lo + hi),
            Marginal::Exponential { rate } => 1.0 / rate,
            Marginal::Gamma { shape, scale } => shape * scale,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Marginal::Normal { sigma, .. } => sigma * sigma,
            Marginal::Beta { alpha, beta, lo, hi } => {
                let s = alpha + beta;
                (hi - lo).powi(2) * alpha * beta / (s * s * (s + 1.0))
            }
            Marginal::Weibull { k, c } => {
                let g1 = gamma(1.0 + 1.0 / k);
                c * c * (gamma(1.0 + 2.0 / k) - g1 * g1)
            }
            Marginal::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            Marginal::Exponential { rate } => 1.0 / (rate * rate),
            Marginal::Gamma { shape, scale } => shape * scale * scale,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Closed support bounds (possibly infinite).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Marginal::Beta { lo, hi, .. } | Marginal::Uniform { lo, hi } => (lo, hi),
            Marginal::Weibull { .. } | Marginal::Exponential { .. } | Marginal::Gamma { .. } => {
                (0.0, f64::INFINITY)
            }
        }
    }

    /// The marginal of the standard-space variable: N(0,1), Beta or Uniform
    /// on [-1, 1], unit-rate Exponential, unit-scale Gamma. Weibull inputs
    /// are used as they are.
    pub fn standard(&self) -> Marginal {
        match *self {
            Marginal::Normal { .. } => Marginal::Normal { mu: 0.0, sigma: 1.0 },
            Marginal::Beta { alpha, beta, .. } => Marginal::Beta {
                alpha,
                beta,
                lo: -1.0,
                hi: 1.0,
            },
            Marginal::Uniform { .. } => Marginal::Uniform { lo: -1.0, hi: 1.0 },
            Marginal::Exponential { .. } => Marginal::Exponential { rate: 1.0 },
            Marginal::Gamma { shape, .. } => Marginal::Gamma { shape, scale: 1.0 },
            w @ Marginal::Weibull { .. } => w,
        }
    }

    /// Affine map from physical value to standard-space value.
    pub fn to_standard(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mu, sigma } => (x - mu) / sigma,
            Marginal::Beta { lo, hi, .. } | Marginal::Uniform { lo, hi } => {
                2.0 * (x - lo) / (hi - lo) - 1.0
            }
            Marginal::Exponential { rate } => x * rate,
            Marginal::Gamma { scale, .. } => x / scale,
            Marginal::Weibull { .. } => x,
        }
    }

    /// Inverse of [`Marginal::to_standard`].
    pub fn from_standard(&self, xi: f64) -> f64 {
        match *self {
            Marginal::Normal { mu, sigma } => mu + sigma * xi,
            Marginal::Beta { lo, hi, .. } | Marginal::Uniform { lo, hi } => {
                lo + 0.5 * (xi + 1.0) * (hi - lo)
            }
            Marginal::Exponential { rate } => xi / rate,
            Marginal::Gamma { scale, .. } => xi * scale,
            Marginal::Weibull { .. } => xi,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mu, sigma } => Normal::new(mu, sigma).expect("validated").pdf(x),
            Marginal::Beta { alpha, beta, lo, hi } => {
                if x < lo || x > hi {
                    return 0.0;
                }
                let t = (x - lo) / (hi - lo);
                Beta::new(alpha, beta).expect("validated").pdf(t) / (hi - lo)
            }
            Marginal::Weibull { k, c } => Weibull::new(k, c).expect("validated").pdf(x),
            Marginal::Uniform { lo, hi } => Uniform::new(lo, hi).expect("validated").pdf(x),
            Marginal::Exponential { rate } => Exp::new(rate).expect("validated").pdf(x),
            Marginal::Gamma { shape, scale } => {
                Gamma::new(shape, 1.0 / scale).expect("validated").pdf(x)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mu, sigma } => phi((x - mu) / sigma),
            Marginal::Beta { alpha, beta, lo, hi } => {
                let t = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
                Beta::new(alpha, beta).expect("validated").cdf(t)
            }
            Marginal::Weibull { k, c } => Weibull::new(k, c).expect("validated").cdf(x),
            Marginal::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Marginal::Exponential { rate } => Exp::new(rate).expect("validated").cdf(x),
            Marginal::Gamma { shape, scale } => {
                Gamma::new(shape, 1.0 / scale).expect("validated").cdf(x)
            }
        }
    }

    /// Survival function 1 − F(x), computed without cancellation where the
    /// underlying distribution allows it.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mu, sigma } => phi(-(x - mu) / sigma),
            Marginal::Beta { alpha, beta, lo, hi } => {
                let t = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
                Beta::new(alpha, beta).expect("validated").sf(t)
            }
            Marginal::Weibull { k, c } => Weibull::new(k, c).expect("validated").sf(x),
            Marginal::Uniform { lo, hi } => ((hi - x) / (hi - lo)).clamp(0.0, 1.0),
            Marginal::Exponential { rate } => Exp::new(rate).expect("validated").sf(x),
            Marginal::Gamma { shape, scale } => {
                Gamma::new(shape, 1.0 / scale).expect("validated").sf(x)
            }
        }
    }

    /// Inverse CDF.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match *self {
            Marginal::Normal { mu, sigma } => mu + sigma * phi_inv(p),
            Marginal::Beta { alpha, beta, lo, hi } => {
                lo + (hi - lo) * Beta::new(alpha, beta).expect("validated").inverse_cdf(p)
            }
            Marginal::Weibull { k, c } => c * (-(-p).ln_1p()).powf(1.0 / k),
            Marginal::Uniform { lo, hi } => lo + p * (hi - lo),
            Marginal::Exponential { rate } => -(-p).ln_1p() / rate,
            Marginal::Gamma { shape, scale } => {
                Gamma::new(shape, 1.0 / scale).expect("validated").inverse_cdf(p)
            }
        }
    }

    /// Inverse survival function: the x with 1 − F(x) = q.
    pub fn quantile_upper(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match *self {
            Marginal::Normal { mu, sigma } => mu - sigma * phi_inv(q),
            Marginal::Beta { alpha, beta, lo, hi } => {
                // 1 − T for T ~ Beta(beta, alpha)
                hi - (hi - lo) * Beta::new(beta, alpha).expect("validated").inverse_cdf(q)
            }
            Marginal::Weibull { k, c } => c * (-q.ln()).powf(1.0 / k),
            Marginal::Uniform { lo, hi } => hi - q * (hi - lo),
            Marginal::Exponential { rate } => -q.ln() / rate,
            Marginal::Gamma { .. } => self.quantile(1.0 - q),
        }
    }

    /// Normal score Φ⁻¹(F(x)), clamped to ±[`NORMAL_CLAMP`].
    pub fn normal_score(&self, x: f64) -> f64 {
        let z = match *self {
            Marginal::Normal { mu, sigma } => (x - mu) / sigma,
            _ => {
                let p = self.cdf(x);
                if p <= 0.5 {
                    phi_inv(p)
                } else {
                    -phi_inv(self.sf(x))
                }
            }
        };
        z.clamp(-NORMAL_CLAMP, NORMAL_CLAMP)
    }

    /// One draw by a direct variate generator.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Normal { mu, sigma } => {
                mu + sigma * rng.sample::<f64, _>(rand_distr::StandardNormal)
            }
            Marginal::Beta { alpha, beta, lo, hi } => {
                lo + (hi - lo) * rand_distr::Beta::new(alpha, beta).expect("validated").sample(rng)
            }
            Marginal::Weibull { k, c } => {
                rand_distr::Weibull::new(c, k).expect("validated").sample(rng)
            }
            Marginal::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Marginal::Exponential { rate } => rng.sample::<f64, _>(rand_distr::Exp1) / rate,
            Marginal::Gamma { shape, scale } => {
                rand_distr::Gamma::new(shape, scale).expect("validated").sample(rng)
            }
        }
    }

    /// F⁻¹(Φ(z)), with z clamped to ±[`NORMAL_CLAMP`].
    pub fn from_normal(&self, z: f64) -> f64 {
        let z = z.clamp(-NORMAL_CLAMP, NORMAL_CLAMP);
        match *self {
            Marginal::Normal { mu, sigma } => mu + sigma * z,
            _ if z <= 0.0 => self.quantile(phi(z)),
            _ => self.quantile_upper(phi(-z)),
        }
    }
}
