//! Fit a low-rank surrogate to a synthetic six-input response, check it on
//! held-out points and compare analytic moments with sampling.

use lra_ppf::lra::{fit, LraOptions};
use lra_ppf::polybasis::basis_for;
use lra_ppf::randinputs::{lhs_sample, Marginal};
use nalgebra::DMatrix;

fn model(x: &[f64]) -> f64 {
    let a: f64 = x.iter().enumerate().map(|(i, v)| 1.0 + 0.1 * (i as f64 + 1.0) * v).product();
    let b: f64 = x.iter().take(3).map(|v| 1.0 - 0.3 * v * v).product();
    a + 0.5 * b
}

fn design(m: usize, n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let xi = lhs_sample(n, m, seed).map(|u| 2.0 * u - 1.0);
    let y = (0..m)
        .map(|r| model(&xi.row(r).iter().copied().collect::<Vec<_>>()))
        .collect();
    (xi, y)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 6;
    let basis = basis_for(&Marginal::Uniform { lo: -1.0, hi: 1.0 }, 5)?;
    let bases = vec![basis; n];
    let (xi, y) = design(120, n, 1);
    let s = fit(&xi, &y, &bases, &LraOptions::default())?;
    let d = &s.diagnostics;
    println!(
        "rank {} degree {} unknowns {} | empirical error {:.2e} cv error {:.2e}",
        d.rank,
        d.degree,
        s.n_unknowns(),
        d.empirical_error,
        d.cv_error
    );
    println!("error path {:?}", d.error_path);

    let (xt, yt) = design(5000, n, 2);
    let pred = s.evaluate_batch(&xt);
    let num: f64 = pred.iter().zip(&yt).map(|(p, t)| (p - t).powi(2)).sum();
    let mean = yt.iter().sum::<f64>() / yt.len() as f64;
    let den: f64 = yt.iter().map(|t| (t - mean).powi(2)).sum();
    println!("held-out relative error {:.2e}", num / den);

    let (xs, _) = design(200_000, n, 3);
    let samples = s.evaluate_batch(&xs);
    let m = samples.iter().sum::<f64>() / samples.len() as f64;
    let v = samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
    println!("analytic mean {:.6} std {:.6}", s.analytic_mean(), s.analytic_std());
    println!("sampled  mean {:.6} std {:.6}", m, v.sqrt());
    Ok(())
}
