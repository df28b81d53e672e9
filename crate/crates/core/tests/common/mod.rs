#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use lra_ppf::casedata::{parse_case, NetworkCase};
use lra_ppf::randinputs::Marginal;

pub fn crate_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn load_case(name: &str) -> NetworkCase {
    let text = std::fs::read_to_string(crate_root().join("data").join(name)).unwrap();
    parse_case(&text).unwrap()
}

/// Tanh-sinh quadrature of `g` over (−1, 1) with step `h`.
fn tanh_sinh(g: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let mut sum = 0.0;
    let n = (3.6 / h).ceil() as i64;
    for j in -n..=n {
        let t = j as f64 * h;
        let s = FRAC_PI_2 * t.sinh();
        let x = s.tanh();
        if x.abs() >= 1.0 {
            continue;
        }
        let w = FRAC_PI_2 * t.cosh() / s.cosh().powi(2);
        let v = g(x);
        if v.is_finite() {
            sum += w * v;
        }
    }
    sum * h
}

/// E[f(X)] for a marginal, by tanh-sinh quadrature of f·pdf after mapping
/// the support onto (−1, 1). Independent of any Gauss rule or recurrence.
pub fn expectation(m: &Marginal, f: &dyn Fn(f64) -> f64) -> f64 {
    let (lo, hi) = m.support();
    let g: Box<dyn Fn(f64) -> f64> = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => Box::new(move |t: f64| {
            let x = lo + 0.5 * (t + 1.0) * (hi - lo);
            0.5 * (hi - lo) * f(x) * m.pdf(x)
        }),
        (true, false) => Box::new(move |t: f64| {
            // x = lo + (1 + t)/(1 − t)
            let x = lo + (1.0 + t) / (1.0 - t);
            2.0 / (1.0 - t).powi(2) * f(x) * m.pdf(x)
        }),
        _ => Box::new(move |t: f64| {
            let x = t / (1.0 - t * t);
            (1.0 + t * t) / (1.0 - t * t).powi(2) * f(x) * m.pdf(x)
        }),
    };
    tanh_sinh(&*g, 1.0 / 128.0)
}
