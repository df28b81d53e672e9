use serde::{Deserialize, Serialize};

use super::{gauss_rule, Family};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `points`-point Gauss–Legendre on each of `panels` equal subintervals of
/// `[lo, hi]`; weights integrate Lebesgue measure.
pub fn composite_gauss_legendre(lo: f64, hi: f64, panels: usize, points: usize) -> QuadratureRule {
    let base = gauss_rule(Family::Legendre, points);
    let h = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * points);
    let mut weights = Vec::with_capacity(panels * points);
    for k in 0..panels {
        let a = lo + k as f64 * h;
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(a + 0.5 * h * (x + 1.0));
            // Reference weights sum to 1 on [-1, 1]; Lebesgue length is 2.
            weights.push(w * h);
        }
    }
    QuadratureRule { nodes, weights }
}
