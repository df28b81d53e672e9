//! Correlated wind, solar and load inputs of the 39-bus study: Nataf
//! Gaussian correlations, then a Latin hypercube sample mapped to physical
//! space with its sample correlations against the targets.

use std::path::Path;

use lra_ppf::ppf::Study;
use lra_ppf::randinputs::{build_nataf, lhs_sample, to_physical};

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/case39_study.toml");
    let mut study = Study::load(&path)?;
    if std::env::args().any(|a| a == "--swap-weibull") {
        study.inputs.swap_weibull();
    }
    let case = study.load_case()?;
    let spec = study.inputs.resolve(&case)?;
    let nataf = build_nataf(&spec)?;
    println!("{} inputs, nearest-PD repair: {}", spec.dim(), nataf.repaired);

    let m = 20_000;
    let xi = spec.uniform_to_standard(&lhs_sample(spec.dim(), m, 42));
    let u = to_physical(&xi, &spec, &nataf);
    let col = |j: usize| -> Vec<f64> { u.column(j).iter().copied().collect() };
    let pairs = [(0, 1), (4, 5), (8, 9), (0, 4), (8, 20)];
    println!("{:<16} {:>8} {:>8} {:>8}", "pair", "target", "gauss", "sample");
    for (a, b) in pairs {
        println!(
            "{:<16} {:>8.4} {:>8.4} {:>8.4}",
            format!("{}-{}", spec.channels[a].id, spec.channels[b].id),
            spec.rho[(a, b)],
            nataf.rho_z[(a, b)],
            corr(&col(a), &col(b))
        );
    }
    for j in [0, 4, 8] {
        let c = col(j);
        let mean = c.iter().sum::<f64>() / m as f64;
        println!(
            "{}: sample mean {mean:.3}, marginal mean {:.3}",
            spec.channels[j].id,
            spec.channels[j].marginal.mean()
        );
    }
    Ok(())
}
