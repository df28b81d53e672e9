//! Probabilistic power flow on the heavily loaded 39-bus study: low-rank
//! surrogate against a 5000-sample Latin hypercube Monte Carlo run.
//!
//! `cargo run --release --example ppf_case39 [-- --swap-weibull]`

use std::path::Path;

use lra_ppf::ppf::{compare, run_lra, run_mcs, PpfConfig, Study};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/case39_study.toml");
    let mut study = Study::load(&path)?;
    if std::env::args().any(|a| a == "--swap-weibull") {
        study.inputs.swap_weibull();
    }
    let problem = study.problem(study.load_case()?)?;
    let config = PpfConfig {
        seed: 7,
        quantiles: study.quantiles.clone(),
        ..PpfConfig::default()
    };

    let lra = run_lra(&problem, &config)?;
    let mcs = run_mcs(&problem, &config)?;
    let table = compare(
        &lra.report.responses,
        &mcs.report.responses,
        Some(lra.timings),
        Some(mcs.timings),
    )?;

    println!("{} random inputs, {} design points", lra.report.n_inputs, lra.report.solves);
    for step in &lra.report.enrichment {
        println!("  ED {:4}  max CV error {:.3e}", step.ed_size, step.max_cv_error);
    }
    println!(
        "{:<10} {:>9} {:>9} {:>8} {:>9} {:>9} {:>8}  rank/deg",
        "response", "mu_mcs", "mu_lra", "dmu %", "sd_mcs", "sd_lra", "dsd %"
    );
    for (row, d) in table.responses.iter().zip(&lra.report.lra) {
        println!(
            "{:<10} {:>9.4} {:>9.4} {:>8.4} {:>9.4} {:>9.4} {:>8.4}  {}/{}",
            row.response.to_string(),
            row.mean_ref,
            row.mean_test,
            row.mean_error_pct.unwrap_or(f64::NAN),
            row.std_ref,
            row.std_test,
            row.std_error_pct.unwrap_or(f64::NAN),
            d.rank,
            d.degree
        );
    }
    for s in &lra.report.responses {
        for v in &s.violations {
            println!(
                "P({} {:?} {}) = {:.4} (MCS {:.4})",
                s.response,
                v.direction,
                v.value,
                v.probability,
                mcs.report.responses.iter().find(|m| m.response == s.response).unwrap().violations[0].probability
            );
        }
    }
    println!(
        "LRA: t_ed {:.2}s t_sc {:.2}s t_es {:.2}s total {:.2}s | MCS total {:.2}s",
        lra.timings.t_ed, lra.timings.t_sc, lra.timings.t_es, lra.timings.t_total, mcs.timings.t_total
    );
    Ok(())
}
