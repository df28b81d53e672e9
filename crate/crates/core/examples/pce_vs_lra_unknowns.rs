//! Unknown counts of a rank-one low-rank surrogate against a full
//! total-degree polynomial chaos expansion as the input dimension grows.

use lra_ppf::lra::{fit, LraOptions};
use lra_ppf::pce::{total_degree_count, MultiIndexSet, PceError, Truncation, DEFAULT_INDEX_CAP};
use lra_ppf::polybasis::basis_for;
use lra_ppf::randinputs::{lhs_sample, Marginal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>5} {:>3} {:>10} {:>22}", "n", "p", "LRA r=1", "PCE total degree");
    for n in [29, 100, 111, 600, 1354] {
        for p in [2, 3] {
            let lra = n * (p + 1) + 1;
            let pce = match MultiIndexSet::build(n, Truncation::TotalDegree { p }) {
                Ok(set) => set.len().to_string(),
                Err(PceError::CombinatorialOverflow { count, .. }) => {
                    format!("{count} (over cap)")
                }
                Err(e) => return Err(e.into()),
            };
            println!("{n:>5} {p:>3} {lra:>10} {pce:>22}");
        }
    }
    println!("index cap {DEFAULT_INDEX_CAP}; C(103,3) = {}", total_degree_count(100, 3));

    // A fitted surrogate on 100 inputs stores exactly n(p+1)+1 unknowns.
    let n = 100;
    let xi = lhs_sample(n, 400, 5).map(|u| 2.0 * u - 1.0);
    let y: Vec<f64> = (0..400)
        .map(|r| xi.row(r).iter().take(5).map(|v| 1.0 + 0.2 * v).product())
        .collect();
    let bases = vec![basis_for(&Marginal::Uniform { lo: -1.0, hi: 1.0 }, 2)?; n];
    let opts = LraOptions {
        max_rank: 1,
        degrees: vec![2],
        ..LraOptions::default()
    };
    let s = fit(&xi, &y, &bases, &opts)?;
    println!("fitted n=100, r=1, p=2: {} unknowns", s.n_unknowns());
    Ok(())
}
