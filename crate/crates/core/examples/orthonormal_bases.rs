//! Orthonormal polynomial bases for each supported marginal: family,
//! Gram-matrix check under a Gauss rule built from the basis itself, and
//! the monomial form of the first polynomials.

use lra_ppf::polybasis::{basis_for, gauss_from_recurrence};
use lra_ppf::randinputs::Marginal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = 4;
    let marginals = [
        Marginal::Normal { mu: 0.0, sigma: 1.0 },
        Marginal::Uniform { lo: -1.0, hi: 1.0 },
        Marginal::Beta { alpha: 0.9, beta: 0.9, lo: -1.0, hi: 1.0 },
        Marginal::Beta { alpha: 2.0, beta: 5.0, lo: -1.0, hi: 1.0 },
        Marginal::Exponential { rate: 1.0 },
        Marginal::Gamma { shape: 2.5, scale: 1.0 },
        Marginal::Weibull { k: 2.15, c: 9.0 },
    ];
    for m in marginals {
        let basis = basis_for(&m, p)?;
        let rule = gauss_from_recurrence(&basis.d, &basis.b, p + 1);
        let mut worst: f64 = 0.0;
        for i in 0..=p {
            for j in 0..=p {
                let g = rule.integrate(|x| {
                    let v = basis.eval(x);
                    v[i] * v[j]
                });
                worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        println!("{m:?}");
        println!("  family {:?}, max |G - I| = {worst:.2e}", basis.family);
        for (k, c) in basis.monomial_coefficients().iter().take(3).enumerate() {
            let terms: Vec<String> = c.iter().map(|x| format!("{x:+.4}")).collect();
            println!("  phi_{k}: [{}]", terms.join(", "));
        }
    }
    Ok(())
}
