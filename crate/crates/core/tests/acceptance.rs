//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion.
//! With `ACCEPTANCE_STRICT=1` any failing criterion makes the run fail.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::OnceLock;
use std::time::Instant;

use lra_ppf::casedata::parse_case;
use lra_ppf::lra::{fit, LraOptions, LraSurrogate, RankOneTerm};
use lra_ppf::pce::{total_degree_count, MultiIndexSet, PceError, Truncation, DEFAULT_INDEX_CAP};
use lra_ppf::polybasis::{basis_for, classical_basis, stieltjes_basis, OrthonormalBasis};
use lra_ppf::powerflow::{InjectionSet, PowerFlowModel, SolveOptions};
use lra_ppf::ppf::{
    compare, run_lra, run_mcs, run_pce, Direction, Limit, PpfConfig, PpfProblem, PpfRun,
    ResponseStatistics, Study,
};
use lra_ppf::randinputs::{lhs_sample, Marginal};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn data(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn study_problem(file: &str, responses: Option<Vec<&str>>) -> PpfProblem {
    let study = Study::load(&data(file)).unwrap();
    let mut problem = study.problem(study.load_case().unwrap()).unwrap();
    if let Some(r) = responses {
        problem.responses = r.iter().map(|s| s.parse().unwrap()).collect();
        problem.limits.retain(|l| problem.responses.contains(&l.response));
    }
    problem
}

fn gram_residual(basis: &OrthonormalBasis) -> f64 {
    let p = basis.degree();
    let mut worst: f64 = 0.0;
    for i in 0..=p {
        for j in 0..=i {
            let g = common::expectation(&basis.marginal, &|x| {
                let v = basis.eval(x);
                v[i] * v[j]
            });
            worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

fn criterion_1() -> Outcome {
    let marginals = [
        Marginal::Normal { mu: 0.0, sigma: 1.0 },
        Marginal::Uniform { lo: -1.0, hi: 1.0 },
        Marginal::Beta { alpha: 0.9, beta: 0.9, lo: 0.0, hi: 1000.0 },
        Marginal::Beta { alpha: 2.0, beta: 5.0, lo: 0.0, hi: 1.0 },
        Marginal::Exponential { rate: 1.0 },
        Marginal::Gamma { shape: 2.5, scale: 1.0 },
        Marginal::Weibull { k: 2.15, c: 9.0 },
    ];
    let mut worst: f64 = 0.0;
    for m in &marginals {
        for p in 0..=5 {
            worst = worst.max(gram_residual(&basis_for(m, p).unwrap()));
        }
    }
    let normal = Marginal::Normal { mu: 0.0, sigma: 1.0 };
    let a = stieltjes_basis(&normal, 5).unwrap().monomial_coefficients();
    let b = classical_basis(&normal, 5).unwrap().monomial_coefficients();
    let herm = a
        .iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-8 && herm <= 1e-8,
        format!("max Gram residual {worst:.2e}, Stieltjes vs Hermite {herm:.2e}"),
    )
}

fn reference_rows(name: &str) -> Vec<Vec<f64>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|x| x.trim().parse().unwrap()).collect())
        .collect()
}

fn criterion_2() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for stem in ["case39", "case118"] {
        let case = parse_case(&std::fs::read_to_string(data(&format!("{stem}.m"))).unwrap()).unwrap();
        let model = PowerFlowModel::new(&case);
        let inj = InjectionSet::from_case(&case);
        let opts = SolveOptions {
            flat_start: true,
            enforce_q_limits: false,
            ..SolveOptions::default()
        };
        let sol = model.solve(&inj, &opts).unwrap();
        let mismatch = model.mismatch(&inj, &sol);
        let mut dv: f64 = 0.0;
        for row in reference_rows(&format!("{stem}_reference.csv")) {
            let k = case.bus_index(row[0] as i64).unwrap();
            dv = dv.max((sol.vm[k] - row[1]).abs());
        }
        ok &= sol.iterations <= 10 && mismatch <= 1e-8 && dv <= 1e-6;
        parts.push(format!(
            "{stem}: {} it, mismatch {mismatch:.1e}, max |dV| {dv:.1e}",
            sol.iterations
        ));
    }
    outcome(ok, parts.join("; "))
}

fn uniform_design(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
    lhs_sample(n, m, seed).map(|u| 2.0 * u - 1.0)
}

fn criterion_3() -> Outcome {
    let n = 5;
    let coef: Vec<[f64; 3]> = (0..n)
        .map(|i| [1.0 + 0.2 * i as f64, 0.5 - 0.1 * i as f64, 0.3 * (-1f64).powi(i as i32)])
        .collect();
    let target = |x: &[f64]| -> f64 {
        x.iter().zip(&coef).map(|(v, c)| c[0] + c[1] * v + c[2] * v * v).product()
    };
    let rows = |xi: &DMatrix<f64>| -> Vec<f64> {
        (0..xi.nrows())
            .map(|r| target(&xi.row(r).iter().copied().collect::<Vec<_>>()))
            .collect()
    };
    let xi = uniform_design(n, 50, 31);
    let y = rows(&xi);
    let bases = vec![basis_for(&Marginal::Uniform { lo: -1.0, hi: 1.0 }, 5).unwrap(); n];
    let s = fit(&xi, &y, &bases, &LraOptions::default()).unwrap();
    let xt = uniform_design(n, 1000, 32);
    let yt = rows(&xt);
    let pred = s.evaluate_batch(&xt);
    let err: f64 = pred.iter().zip(&yt).map(|(p, t)| (p - t).powi(2)).sum::<f64>().sqrt();
    let rel = err / yt.iter().map(|t| t * t).sum::<f64>().sqrt();
    outcome(
        rel <= 1e-8,
        format!(
            "selected rank {} degree {}, held-out relative error {rel:.2e}",
            s.diagnostics.rank, s.diagnostics.degree
        ),
    )
}

fn random_surrogate(rng: &mut ChaCha8Rng) -> LraSurrogate {
    let pool = [
        Marginal::Normal { mu: 0.0, sigma: 1.0 },
        Marginal::Uniform { lo: -1.0, hi: 1.0 },
        Marginal::Beta { alpha: 0.9, beta: 0.9, lo: -1.0, hi: 1.0 },
        Marginal::Gamma { shape: 2.5, scale: 1.0 },
        Marginal::Weibull { k: 2.15, c: 9.0 },
    ];
    let n = rng.random_range(1..=10);
    let r = rng.random_range(1..=3);
    let p = rng.random_range(1..=4);
    let bases: Vec<OrthonormalBasis> = (0..n)
        .map(|_| basis_for(&pool[rng.random_range(0..pool.len())], p).unwrap())
        .collect();
    let terms = (0..r)
        .map(|_| RankOneTerm {
            z: (0..n)
                .map(|_| {
                    let mut z: Vec<f64> = (0..=p).map(|_| rng.random_range(-0.3..0.3)).collect();
                    z[0] = rng.random_range(0.7..1.2);
                    z
                })
                .collect(),
        })
        .collect();
    let weights = (0..r).map(|_| rng.random_range(-2.0..2.0)).collect();
    LraSurrogate {
        bases,
        terms,
        weights,
        diagnostics: Default::default(),
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let m = 1_000_000;
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let s = random_surrogate(&mut rng);
        let mut sample_rng = ChaCha8Rng::seed_from_u64(k);
        let mut x = vec![0.0; s.dim()];
        let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
        let vals: Vec<f64> = (0..m)
            .map(|_| {
                for (xi, b) in x.iter_mut().zip(&s.bases) {
                    *xi = b.marginal.sample(&mut sample_rng);
                }
                s.evaluate(&x)
            })
            .collect();
        for v in &vals {
            s1 += v;
        }
        let mean = s1 / m as f64;
        for v in &vals {
            let d = (v - mean).powi(2);
            s2 += d;
            s4 += d * d;
        }
        let var = s2 / (m - 1) as f64;
        let m4 = s4 / m as f64;
        let se_mean = (var / m as f64).sqrt();
        let se_var = ((m4 - var * var) / m as f64).sqrt();
        let zm = (s.analytic_mean() - mean).abs() / se_mean;
        let zv = (s.analytic_variance() - var).abs() / se_var;
        worst = worst.max(zm).max(zv);
    }
    outcome(worst <= 3.0, format!("largest deviation {worst:.2} standard errors over 20 surrogates"))
}

fn criterion_5() -> Outcome {
    let n = 100;
    let xi = uniform_design(n, 400, 5);
    let y: Vec<f64> = (0..400)
        .map(|r| xi.row(r).iter().take(5).map(|v| 1.0 + 0.2 * v).product())
        .collect();
    let bases = vec![basis_for(&Marginal::Uniform { lo: -1.0, hi: 1.0 }, 2).unwrap(); n];
    let opts = LraOptions {
        max_rank: 1,
        degrees: vec![2],
        ..LraOptions::default()
    };
    let unknowns = fit(&xi, &y, &bases, &opts).unwrap().n_unknowns();
    let pce = MultiIndexSet::build(100, Truncation::TotalDegree { p: 3 }).map(|s| s.len());
    let overflow = (3..=5).all(|p| {
        matches!(
            MultiIndexSet::build(600, Truncation::TotalDegree { p }),
            Err(PceError::CombinatorialOverflow { .. })
        )
    });
    let pass = unknowns == 301
        && pce == Ok(176_851)
        && total_degree_count(100, 3) == 176_851
        && overflow;
    outcome(
        pass,
        format!(
            "LRA unknowns {unknowns}, PCE indices {:?}, n=600 p>=3 overflow at cap {DEFAULT_INDEX_CAP}: {overflow}",
            pce
        ),
    )
}

/// 39-bus LRA run at default settings and its Monte Carlo benchmark,
/// shared by criteria 6 and 9.
fn case39_runs() -> &'static (PpfRun, PpfRun, f64) {
    static RUNS: OnceLock<(PpfRun, PpfRun, f64)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let problem = study_problem("case39_study.toml", None);
        let config = PpfConfig {
            seed: 7,
            ..PpfConfig::default()
        };
        let t = Instant::now();
        let lra = run_lra(&problem, &config).unwrap();
        let mcs = run_mcs(&problem, &config).unwrap();
        (lra, mcs, t.elapsed().as_secs_f64())
    })
}

fn criterion_6() -> Outcome {
    let (lra, mcs, secs) = case39_runs();
    let cmp = compare(&lra.report.responses, &mcs.report.responses, None, None).unwrap();
    let dmu = cmp.responses.iter().map(|r| r.mean_error_pct.unwrap().abs()).fold(0.0, f64::max);
    let dsd = cmp.responses.iter().map(|r| r.std_error_pct.unwrap().abs()).fold(0.0, f64::max);
    outcome(
        dmu <= 1.5 && dsd <= 5.0 && lra.report.solves <= 290 && *secs < 300.0,
        format!(
            "ED {} points, max |dmu| {dmu:.3}%, max |dsd| {dsd:.3}%, {secs:.1}s",
            lra.report.solves
        ),
    )
}

fn criterion_7() -> Outcome {
    let problem = study_problem("case39_study.toml", Some(vec!["SF:13-14"]));
    let n = problem.spec.dim();
    let at = |m: usize, seed: u64| -> f64 {
        let config = PpfConfig {
            seed,
            ed_initial: Some(m),
            ed_max: Some(m),
            surrogate_samples: 1000,
            ..PpfConfig::default()
        };
        run_lra(&problem, &config).unwrap().report.responses[0].mean
    };
    let diffs: Vec<f64> = (1..=20u64)
        .map(|seed| {
            let (a, b) = (at(5 * n, seed), at(10 * n, seed));
            ((a - b) / b).abs() * 100.0
        })
        .collect();
    let within = diffs.iter().filter(|d| **d <= 0.2).count();
    let worst = diffs.iter().copied().fold(0.0, f64::max);
    outcome(
        within >= 18,
        format!("{within}/20 seeds within 0.2% (largest {worst:.3}%)"),
    )
}

fn criterion_8() -> Outcome {
    let problem = study_problem("case118_study.toml", None);
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
    let lra = run_lra(&problem, &config).unwrap();
    let mcs = run_mcs(&problem, &config).unwrap();
    let ratio = mcs.timings.t_total / lra.timings.t_total;
    outcome(
        ratio >= 3.0,
        format!(
            "LRA {:.2}s (ED {:.2}s, fit {:.2}s, 1e5 evaluations {:.2}s) vs MCS {:.2}s: {ratio:.1}x",
            lra.timings.t_total,
            lra.timings.t_ed,
            lra.timings.t_sc,
            lra.timings.t_es,
            mcs.timings.t_total
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mu, sigma, limit) = (4.0, 0.9, 5.5);
    let normal = rand_distr::Normal::new(mu, sigma).unwrap();
    let values: Vec<f64> = (0..100_000).map(|_| rng.sample(normal)).collect();
    let id = "SF:1-2".parse().unwrap();
    let lim = Limit {
        response: id,
        value: limit,
        direction: Direction::Above,
    };
    let s = ResponseStatistics::from_samples(id, &values, None, 100, &[], &[lim]);
    let exact = Normal::new(mu, sigma).unwrap().sf(limit);
    let v = &s.violations[0];
    let z = (v.probability - exact).abs() / v.std_error;

    let (lra, mcs, _) = case39_runs();
    let study = |run: &PpfRun| -> f64 {
        run.report
            .responses
            .iter()
            .flat_map(|r| &r.violations)
            .find(|v| v.value == 6.0)
            .map(|v| v.probability)
            .unwrap_or(f64::NAN)
    };
    let (p_lra, p_mcs) = (study(lra), study(mcs));
    outcome(
        z <= 3.0 && p_lra > 0.01 && p_lra < 0.2,
        format!(
            "synthetic tail {:.5} vs exact {exact:.5} ({z:.2} SE); 39-bus P(S13-14 > 6 p.u.) = {:.2}% (MCS {:.2}%), required in (1%, 20%)",
            v.probability,
            p_lra * 100.0,
            p_mcs * 100.0
        ),
    )
}

fn criterion_10() -> Outcome {
    let problem = study_problem("case39_study.toml", None);
    let config = PpfConfig {
        seed: 5,
        ed_max: Some(87),
        surrogate_samples: 5000,
        mcs_samples: 300,
        quantiles: vec![0.1, 0.5, 0.9],
        lra: LraOptions {
            degrees: vec![2, 3],
            max_rank: 2,
            ..LraOptions::default()
        },
        ..PpfConfig::default()
    };
    let in_pool = |threads: usize| -> Vec<String> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let lra = run_lra(&problem, &config).unwrap();
            let pce = run_pce(&problem, &config).unwrap();
            let mcs = run_mcs(&problem, &config).unwrap();
            vec![
                serde_json::to_string(&lra.report).unwrap(),
                serde_json::to_string(&lra.surrogates).unwrap(),
                serde_json::to_string(&pce.report).unwrap(),
                serde_json::to_string(&mcs.report).unwrap(),
            ]
        })
    };
    let one = in_pool(1);
    let four = in_pool(4);
    let again = in_pool(4);
    let same = one == four && four == again;
    outcome(
        same,
        format!("LRA, PCE and MCS reports identical at 1 and 4 threads: {same}"),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "basis orthonormality", criterion_1),
        (2, "power flow reference", criterion_2),
        (3, "exact recovery", criterion_3),
        (4, "analytic moments", criterion_4),
        (5, "unknown counts", criterion_5),
        (6, "39-bus accuracy", criterion_6),
        (7, "ED plateau", criterion_7),
        (8, "118-bus efficiency", criterion_8),
        (9, "violation probability", criterion_9),
        (10, "determinism", criterion_10),
    ];
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = Vec::new();
    for (k, name, f) in criteria {
        if !filter.is_empty() && !filter.contains(&k) {
            continue;
        }
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let status = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {k:>2} {status} [{name}] {} ({:.1}s)",
            result.detail,
            t.elapsed().as_secs_f64()
        );
        if !result.pass {
            failed.push(k);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
