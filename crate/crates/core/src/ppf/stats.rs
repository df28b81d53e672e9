use serde::{Deserialize, Serialize};

use crate::powerflow::ResponseId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Above,
    Below,
}

/// Operating limit on one response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Limit {
    pub response: ResponseId,
    pub value: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` equally spaced edges.
    pub edges: Vec<f64>,
    /// Probability density per bin.
    pub density: Vec<f64>,
    /// Empirical CDF at each upper edge.
    pub cdf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub p: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub value: f64,
    pub direction: Direction,
    pub probability: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseStatistics {
    pub response: ResponseId,
    /// Analytic moments for surrogates, sample moments for Monte Carlo.
    pub mean: f64,
    pub std: f64,
    pub samples: usize,
    pub sample_mean: f64,
    pub sample_std: f64,
    /// Standard error of the sample mean.
    pub std_error: f64,
    pub histogram: Histogram,
    pub quantiles: Vec<Quantile>,
    pub violations: Vec<Violation>,
}

/// Mean and unbiased standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

/// Linear interpolation between order statistics at `h = (M−1)p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Fraction of samples strictly beyond `value`.
pub fn exceedance(values: &[f64], value: f64, direction: Direction) -> f64 {
    let count = values
        .iter()
        .filter(|&&v| match direction {
            Direction::Above => v > value,
            Direction::Below => v < value,
        })
        .count();
    count as f64 / values.len() as f64
}

pub fn histogram(sorted: &[f64], bins: usize) -> Histogram {
    let m = sorted.len();
    let (lo, hi) = (sorted[0], sorted[m - 1]);
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        let pad = 1e-9 * lo.abs().max(1.0);
        (lo - pad, hi + pad)
    };
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|k| if k == bins { hi } else { lo + k as f64 * width })
        .collect();
    let mut counts = vec![0usize; bins];
    for &v in sorted {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let density = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, e)| c as f64 / (m as f64 * (e[1] - e[0])))
        .collect();
    let mut acc = 0;
    let cdf = counts
        .iter()
        .map(|&c| {
            acc += c;
            acc as f64 / m as f64
        })
        .collect();
    Histogram {
        edges,
        density,
        cdf,
    }
}

impl ResponseStatistics {
    /// Statistics of sampled values. `moments` overrides the reported
    /// mean and standard deviation.
    pub fn from_samples(
        response: ResponseId,
        values: &[f64],
        moments: Option<(f64, f64)>,
        bins: usize,
        probs: &[f64],
        limits: &[Limit],
    ) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (sample_mean, sample_std) = mean_std(values);
        let (mean, std) = moments.unwrap_or((sample_mean, sample_std));
        let m = values.len() as f64;
        let violations = limits
            .iter()
            .filter(|l| l.response == response)
            .map(|l| {
                let p = exceedance(values, l.value, l.direction);
                Violation {
                    value: l.value,
                    direction: l.direction,
                    probability: p,
                    std_error: (p * (1.0 - p) / m).sqrt(),
                }
            })
            .collect();
        ResponseStatistics {
            response,
            mean,
            std,
            samples: values.len(),
            sample_mean,
            sample_std,
            std_error: sample_std / m.sqrt(),
            histogram: histogram(&sorted, bins.max(1)),
            quantiles: probs
                .iter()
                .map(|&p| Quantile {
                    p,
                    value: quantile_sorted(&sorted, p),
                })
                .collect(),
            violations,
        }
    }
}
