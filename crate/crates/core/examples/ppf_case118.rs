//! Efficiency study on the heavily loaded 118-bus case: low-rank surrogate
//! (design, fit and 10^5 surrogate evaluations) against a 10000-sample
//! Latin hypercube Monte Carlo run.
//!
//! `cargo run --release --example ppf_case118`

use std::path::Path;

use lra_ppf::lra::LraOptions;
use lra_ppf::ppf::{compare, run_lra, run_mcs, PpfConfig, Study};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/case118_study.toml");
    let study = Study::load(&path)?;
    let problem = study.problem(study.load_case()?)?;
    let n = problem.spec.dim();
    let config = PpfConfig {
        seed: 11,
        ed_initial: Some(4 * n),
        ed_max: Some(4 * n),
        mcs_samples: 10_000,
        lra: LraOptions {
            degrees: vec![2],
            max_rank: 3,
            ..LraOptions::default()
        },
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
    println!("{} random inputs, {} design points", n, lra.report.solves);
    for (row, d) in table.responses.iter().zip(&lra.report.lra) {
        println!(
            "{:<10} mu {:.4}/{:.4} ({:+.4}%)  sd {:.4}/{:.4} ({:+.3}%)  rank {} cv {:.2e}",
            row.response.to_string(),
            row.mean_ref,
            row.mean_test,
            row.mean_error_pct.unwrap_or(f64::NAN),
            row.std_ref,
            row.std_test,
            row.std_error_pct.unwrap_or(f64::NAN),
            d.rank,
            d.cv_error
        );
    }
    let (l, m) = (lra.timings, mcs.timings);
    println!(
        "LRA t_ed {:.2}s t_sc {:.2}s t_es {:.2}s total {:.2}s | MCS {:.2}s | speed-up {:.1}x",
        l.t_ed,
        l.t_sc,
        l.t_es,
        l.t_total,
        m.t_total,
        m.t_total / l.t_total
    );
    Ok(())
}
