//! Probabilistic power flow: experimental design, surrogate fitting with
//! enrichment, surrogate sampling, the Monte Carlo benchmark and error
//! indices between runs.

mod compare;
mod evaluate;
pub mod report;
mod stats;
mod study;

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::casedata::{CaseError, NetworkCase};
use crate::lra::{fit_all, ExperimentalDesign, LraDiagnostics, LraError, LraOptions, LraSurrogate};
use crate::pce::{fit_pce, MultiIndexSet, PceError, PceSurrogate, Truncation};
use crate::polybasis::{basis_for, BasisError, OrthonormalBasis};
use crate::powerflow::{PowerFlowError, ResponseId, SolveOptions};
use crate::randinputs::{lhs_sample, InputError, Marginal, RandomInputSpec};
use crate::rng::derive_seed;

pub use compare::{compare, ComparisonReport, ResponseComparison};
pub use evaluate::{Evaluator, SolvedDesign};
pub use stats::{
    exceedance, histogram, mean_std, quantile_sorted, Direction, Histogram, Limit, Quantile,
    ResponseStatistics, Violation,
};
pub use study::{Study, StudyError};

#[derive(Debug, Error)]
pub enum PpfError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    PowerFlow(#[from] PowerFlowError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Lra(#[from] LraError),
    #[error(transparent)]
    Pce(#[from] PceError),
    #[error("{rejected} of {requested} power flows failed (last: {last_error})")]
    TooManyFailedSolves {
        rejected: usize,
        requested: usize,
        last_error: String,
    },
    #[error("response lists differ: only in test {only_test:?}, only in reference {only_ref:?}")]
    ResponseMismatch {
        only_test: Vec<String>,
        only_ref: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lra,
    Pce,
    Mcs,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Lra => "lra",
            Method::Pce => "pce",
            Method::Mcs => "mcs",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpfConfig {
    pub seed: u64,
    /// Initial design size; 2n when unset.
    pub ed_initial: Option<usize>,
    /// Points added per enrichment; n when unset.
    pub ed_increment: Option<usize>,
    /// Largest design size; 10n when unset.
    pub ed_max: Option<usize>,
    /// Enrichment stops once every response's CV error is at most this.
    pub target_error: f64,
    /// Surrogate evaluations used for distributions.
    pub surrogate_samples: usize,
    /// Monte Carlo sample size.
    pub mcs_samples: usize,
    pub bins: usize,
    pub quantiles: Vec<f64>,
    /// Largest tolerated fraction of failed power flows.
    pub max_failure_rate: f64,
    pub enforce_q_limits: bool,
    pub lra: LraOptions,
    /// Highest total degree tried for the PCE baseline.
    pub pce_max_degree: usize,
    /// Hyperbolic truncation exponent; 1 gives the total-degree set.
    pub pce_q: f64,
}

impl Default for PpfConfig {
    fn default() -> Self {
        PpfConfig {
            seed: 1,
            ed_initial: None,
            ed_increment: None,
            ed_max: None,
            target_error: 1e-4,
            surrogate_samples: 100_000,
            mcs_samples: 5000,
            bins: 100,
            quantiles: Vec::new(),
            max_failure_rate: 0.05,
            enforce_q_limits: true,
            lra: LraOptions::default(),
            pce_max_degree: 3,
            pce_q: 1.0,
        }
    }
}

/// Design sizes after applying the n-based defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSizes {
    pub initial: usize,
    pub increment: usize,
    pub max: usize,
}

impl PpfConfig {
    pub fn design_sizes(&self, n: usize) -> DesignSizes {
        let max = self.ed_max.unwrap_or(10 * n);
        DesignSizes {
            initial: self.ed_initial.unwrap_or(2 * n).min(max),
            increment: self.ed_increment.unwrap_or(n),
            max,
        }
    }

    pub fn validate(&self, n: usize) -> Result<(), PpfError> {
        let s = self.design_sizes(n);
        let bad = |m: &str| Err(PpfError::Config(m.into()));
        if let Some(i) = self.ed_initial {
            if i > s.max {
                return bad("ed_initial exceeds ed_max");
            }
        }
        if s.increment == 0 {
            return bad("ed_increment must be at least 1");
        }
        if s.initial < 2 {
            return bad("experimental design needs at least 2 points");
        }
        if self.surrogate_samples < 1000 {
            return bad("surrogate_samples must be at least 1000");
        }
        if self.mcs_samples < 100 {
            return bad("mcs_samples must be at least 100");
        }
        if self.bins == 0 {
            return bad("bins must be at least 1");
        }
        if self.quantiles.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("quantile probabilities must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.max_failure_rate) {
            return bad("max_failure_rate must lie in [0, 1)");
        }
        if self.lra.degrees.is_empty() || self.lra.max_rank == 0 {
            return bad("LRA needs at least one degree and rank");
        }
        Ok(())
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            enforce_q_limits: self.enforce_q_limits,
            ..SolveOptions::default()
        }
    }
}

/// Network, random inputs and quantities of interest of one study.
#[derive(Debug, Clone)]
pub struct PpfProblem {
    pub case: NetworkCase,
    pub spec: RandomInputSpec,
    pub responses: Vec<ResponseId>,
    pub limits: Vec<Limit>,
}

/// Wall-clock seconds: design solves, surrogate construction, surrogate
/// evaluation and statistics, and the whole run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub t_ed: f64,
    pub t_sc: f64,
    pub t_es: f64,
    pub t_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentStep {
    pub ed_size: usize,
    /// Largest cross-validation error over the responses.
    pub max_cv_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PceInfo {
    pub degree: usize,
    pub terms: usize,
}

/// Deterministic part of a run: identical for identical inputs and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpfReport {
    pub method: Method,
    pub seed: u64,
    pub n_inputs: usize,
    /// Power flows in the final design (or Monte Carlo sample).
    pub solves: usize,
    pub rejected_solves: usize,
    pub responses: Vec<ResponseStatistics>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enrichment: Vec<EnrichmentStep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lra: Vec<LraDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pce: Option<PceInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Surrogate {
    Lra(LraSurrogate),
    Pce(PceSurrogate),
}

impl Surrogate {
    pub fn evaluate_batch(&self, xi: &DMatrix<f64>) -> Vec<f64> {
        match self {
            Surrogate::Lra(s) => s.evaluate_batch(xi),
            Surrogate::Pce(s) => s.evaluate_batch(xi),
        }
    }

    pub fn moments(&self) -> (f64, f64) {
        match self {
            Surrogate::Lra(s) => (s.analytic_mean(), s.analytic_std()),
            Surrogate::Pce(s) => {
                let (m, v) = s.moments();
                (m, v.sqrt())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PpfRun {
    pub report: PpfReport,
    pub surrogates: Vec<Surrogate>,
    pub timings: Timings,
    /// Sampled values per response (surrogate or Monte Carlo).
    pub samples: Vec<Vec<f64>>,
}

/// One basis per input, built once per distinct standard marginal.
pub fn bases_for(spec: &RandomInputSpec, p: usize) -> Result<Vec<OrthonormalBasis>, BasisError> {
    let mut cache: Vec<(Marginal, OrthonormalBasis)> = Vec::new();
    spec.standard_marginals()
        .into_iter()
        .map(|m| {
            if let Some((_, b)) = cache.iter().find(|(c, _)| *c == m) {
                return Ok(b.clone());
            }
            let b = basis_for(&m, p)?;
            cache.push((m, b.clone()));
            Ok(b)
        })
        .collect()
}

fn append_rows(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows() + b.nrows(), a.ncols(), |r, c| {
        if r < a.nrows() {
            a[(r, c)]
        } else {
            b[(r - a.nrows(), c)]
        }
    })
}

/// Values of every surrogate at every row of `xi`. LRA surrogates fitted on
/// `bases` share one table of univariate basis values per row.
fn evaluate_surrogates(
    surrogates: &[Surrogate],
    bases: &[OrthonormalBasis],
    xi: &DMatrix<f64>,
) -> Vec<Vec<f64>> {
    use rayon::prelude::*;
    let lra: Option<Vec<&LraSurrogate>> = surrogates
        .iter()
        .map(|s| match s {
            Surrogate::Lra(l) => Some(l),
            Surrogate::Pce(_) => None,
        })
        .collect();
    let Some(lra) = lra else {
        return surrogates.iter().map(|s| s.evaluate_batch(xi)).collect();
    };
    let p = bases.iter().map(OrthonormalBasis::degree).max().unwrap_or(0);
    let rows: Vec<Vec<f64>> = (0..xi.nrows())
        .into_par_iter()
        .map_init(
            || vec![vec![0.0; p + 1]; bases.len()],
            |phi, r| {
                for (i, b) in bases.iter().enumerate() {
                    b.eval_into(xi[(r, i)], &mut phi[i]);
                }
                lra.iter().map(|s| s.evaluate_with(phi)).collect()
            },
        )
        .collect();
    (0..surrogates.len())
        .map(|k| rows.iter().map(|row| row[k]).collect())
        .collect()
}

fn statistics_from_surrogates(
    problem: &PpfProblem,
    eval: &Evaluator,
    surrogates: &[Surrogate],
    bases: &[OrthonormalBasis],
    config: &PpfConfig,
) -> (Vec<ResponseStatistics>, Vec<Vec<f64>>) {
    let xi = eval.spec().sample_standard(
        config.surrogate_samples,
        derive_seed(config.seed, "surrogate-samples", 0),
    );
    let samples = evaluate_surrogates(surrogates, bases, &xi);
    let stats = surrogates
        .iter()
        .zip(&samples)
        .zip(&problem.responses)
        .map(|((s, v), id)| {
            ResponseStatistics::from_samples(
                *id,
                v,
                Some(s.moments()),
                config.bins,
                &config.quantiles,
                &problem.limits,
            )
        })
        .collect();
    (stats, samples)
}

fn initial_design(
    eval: &Evaluator,
    m: usize,
    config: &PpfConfig,
    batch: u64,
) -> Result<SolvedDesign, PpfError> {
    let xi = eval.lhs_design(m, derive_seed(config.seed, "ed", batch));
    eval.solve_design(xi, config.seed, &format!("ed-resample-{batch}"), config.max_failure_rate)
}

/// Surrogate-based analysis with low-rank approximations: design, fit,
/// enrichment while any cross-validation error exceeds the target, then
/// analytic moments and sampled distributions.
pub fn run_lra(problem: &PpfProblem, config: &PpfConfig) -> Result<PpfRun, PpfError> {
    let start = Instant::now();
    let n = problem.spec.dim();
    config.validate(n)?;
    let sizes = config.design_sizes(n);
    let eval = Evaluator::new(&problem.case, &problem.spec, &problem.responses, config.solve_options())?;
    let p_max = config.lra.degrees.iter().copied().max().unwrap_or(1);
    let bases = bases_for(&problem.spec, p_max)?;

    let mut t_ed = 0.0;
    let mut t_sc = 0.0;
    let t0 = Instant::now();
    let mut design = initial_design(&eval, sizes.initial, config, 0)?;
    t_ed += t0.elapsed().as_secs_f64();
    let mut enrichment = Vec::new();
    let mut batch = 0;
    let surrogates = loop {
        let t0 = Instant::now();
        let ed = ExperimentalDesign::new(design.xi.clone(), design.y.clone())?;
        let fits = fit_all(&ed, &bases, &config.lra)?;
        t_sc += t0.elapsed().as_secs_f64();
        let max_cv = fits
            .iter()
            .map(|s| s.diagnostics.cv_error)
            .fold(0.0, f64::max);
        enrichment.push(EnrichmentStep {
            ed_size: design.xi.nrows(),
            max_cv_error: max_cv,
        });
        let size = design.xi.nrows();
        if max_cv <= config.target_error || size >= sizes.max {
            break fits;
        }
        batch += 1;
        let t0 = Instant::now();
        let extra = initial_design(&eval, sizes.increment.min(sizes.max - size), config, batch)?;
        design = SolvedDesign {
            xi: append_rows(&design.xi, &extra.xi),
            y: append_rows(&design.y, &extra.y),
            rejected: design.rejected + extra.rejected,
        };
        t_ed += t0.elapsed().as_secs_f64();
    };

    let t0 = Instant::now();
    let lra: Vec<LraDiagnostics> = surrogates.iter().map(|s| s.diagnostics.clone()).collect();
    let surrogates: Vec<Surrogate> = surrogates.into_iter().map(Surrogate::Lra).collect();
    let (responses, samples) = statistics_from_surrogates(problem, &eval, &surrogates, &bases, config);
    let t_es = t0.elapsed().as_secs_f64();
    Ok(PpfRun {
        report: PpfReport {
            method: Method::Lra,
            seed: config.seed,
            n_inputs: n,
            solves: design.xi.nrows(),
            rejected_solves: design.rejected,
            responses,
            enrichment,
            lra,
            pce: None,
        },
        surrogates,
        timings: Timings {
            t_ed,
            t_sc,
            t_es,
            t_total: start.elapsed().as_secs_f64(),
        },
        samples,
    })
}

/// Baseline with a full polynomial chaos expansion on a fixed design of
/// `ed_max` points, using the highest degree whose index set has at most
/// half as many terms as design points.
pub fn run_pce(problem: &PpfProblem, config: &PpfConfig) -> Result<PpfRun, PpfError> {
    let start = Instant::now();
    let n = problem.spec.dim();
    config.validate(n)?;
    let m = config.design_sizes(n).max;
    let eval = Evaluator::new(&problem.case, &problem.spec, &problem.responses, config.solve_options())?;

    let mut chosen: Option<MultiIndexSet> = None;
    for p in 1..=config.pce_max_degree.max(1) {
        let t = if config.pce_q >= 1.0 {
            Truncation::TotalDegree { p }
        } else {
            Truncation::Hyperbolic { p, q: config.pce_q }
        };
        match MultiIndexSet::build_capped(n, t, m / 2) {
            Ok(set) => chosen = Some(set),
            Err(PceError::CombinatorialOverflow { .. }) => break,
            Err(e) => return Err(e.into()),
        }
    }
    let set = match chosen {
        Some(s) => s,
        None => {
            return Err(PceError::Underdetermined {
                terms: n + 1,
                points: m / 2,
            }
            .into())
        }
    };
    let bases = bases_for(&problem.spec, set.max_degree())?;

    let t0 = Instant::now();
    let design = initial_design(&eval, m, config, 0)?;
    let t_ed = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let fits = (0..design.y.ncols())
        .map(|c| {
            let y: Vec<f64> = design.y.column(c).iter().copied().collect();
            fit_pce(&design.xi, &y, &bases, &set).map(Surrogate::Pce)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let t_sc = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let (responses, samples) = statistics_from_surrogates(problem, &eval, &fits, &bases, config);
    let t_es = t0.elapsed().as_secs_f64();
    Ok(PpfRun {
        report: PpfReport {
            method: Method::Pce,
            seed: config.seed,
            n_inputs: n,
            solves: m,
            rejected_solves: design.rejected,
            responses,
            enrichment: Vec::new(),
            lra: Vec::new(),
            pce: Some(PceInfo {
                degree: set.max_degree(),
                terms: set.len(),
            }),
        },
        surrogates: fits,
        timings: Timings {
            t_ed,
            t_sc,
            t_es,
            t_total: start.elapsed().as_secs_f64(),
        },
        samples,
    })
}

/// Latin hypercube Monte Carlo benchmark with `mcs_samples` power flows.
pub fn run_mcs(problem: &PpfProblem, config: &PpfConfig) -> Result<PpfRun, PpfError> {
    let start = Instant::now();
    let n = problem.spec.dim();
    config.validate(n)?;
    let eval = Evaluator::new(&problem.case, &problem.spec, &problem.responses, config.solve_options())?;
    let xi = eval.spec().uniform_to_standard(&lhs_sample(
        n,
        config.mcs_samples,
        derive_seed(config.seed, "mcs", 0),
    ));
    let design = eval.solve_design(xi, config.seed, "mcs-resample", config.max_failure_rate)?;
    let t_ed = start.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let samples: Vec<Vec<f64>> = (0..design.y.ncols())
        .map(|c| design.y.column(c).iter().copied().collect())
        .collect();
    let responses = samples
        .iter()
        .zip(&problem.responses)
        .map(|(v, id)| {
            ResponseStatistics::from_samples(*id, v, None, config.bins, &config.quantiles, &problem.limits)
        })
        .collect();
    let t_es = t0.elapsed().as_secs_f64();
    Ok(PpfRun {
        report: PpfReport {
            method: Method::Mcs,
            seed: config.seed,
            n_inputs: n,
            solves: config.mcs_samples,
            rejected_solves: design.rejected,
            responses,
            enrichment: Vec::new(),
            lra: Vec::new(),
            pce: None,
        },
        surrogates: Vec::new(),
        timings: Timings {
            t_ed,
            t_sc: 0.0,
            t_es,
            t_total: start.elapsed().as_secs_f64(),
        },
        samples,
    })
}

pub fn run(problem: &PpfProblem, method: Method, config: &PpfConfig) -> Result<PpfRun, PpfError> {
    match method {
        Method::Lra => run_lra(problem, config),
        Method::Pce => run_pce(problem, config),
        Method::Mcs => run_mcs(problem, config),
    }
}
