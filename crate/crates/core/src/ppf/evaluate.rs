use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use super::PpfError;
use crate::casedata::NetworkCase;
use crate::powerflow::{
    extract_responses, PowerFlowError, PowerFlowModel, ResponseId, ResponseSpec, SolveOptions,
};
use crate::randinputs::{build_nataf, lhs_sample, to_physical, InjectionMap, NatafModel, RandomInputSpec};
use crate::rng;

/// Deterministic model from standard-space inputs to responses: inverse
/// Nataf, injections, power flow, response extraction.
#[derive(Debug, Clone)]
pub struct Evaluator {
    model: PowerFlowModel,
    map: InjectionMap,
    spec: RandomInputSpec,
    nataf: NatafModel,
    responses: ResponseSpec,
    opts: SolveOptions,
}

/// Solved design: standard-space points and their responses.
#[derive(Debug, Clone)]
pub struct SolvedDesign {
    pub xi: DMatrix<f64>,
    pub y: DMatrix<f64>,
    /// Points replaced because their power flow failed.
    pub rejected: usize,
}

impl Evaluator {
    pub fn new(
        case: &NetworkCase,
        spec: &RandomInputSpec,
        responses: &[ResponseId],
        opts: SolveOptions,
    ) -> Result<Self, PpfError> {
        let model = PowerFlowModel::new(case);
        let responses = ResponseSpec::new(&model, responses)?;
        Ok(Evaluator {
            map: spec.injection_map(case)?,
            nataf: build_nataf(spec)?,
            spec: spec.clone(),
            model,
            responses,
            opts,
        })
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn spec(&self) -> &RandomInputSpec {
        &self.spec
    }

    pub fn response_ids(&self) -> &[ResponseId] {
        self.responses.ids()
    }

    pub fn nataf(&self) -> &NatafModel {
        &self.nataf
    }

    fn solve_physical(&self, u: &[f64]) -> Result<Vec<f64>, PowerFlowError> {
        let inj = self.map.apply(u);
        let sol = self.model.solve(&inj, &self.opts)?;
        Ok(extract_responses(&self.model, &self.responses, &sol))
    }

    /// Responses at each standard-space row, solved in parallel.
    pub fn solve_rows(&self, xi: &DMatrix<f64>) -> Vec<Result<Vec<f64>, PowerFlowError>> {
        let u = to_physical(xi, &self.spec, &self.nataf);
        (0..u.nrows())
            .into_par_iter()
            .map(|r| {
                let row: Vec<f64> = u.row(r).iter().copied().collect();
                self.solve_physical(&row)
            })
            .collect()
    }

    /// Latin hypercube design of `m` points in standard space.
    pub fn lhs_design(&self, m: usize, seed: u64) -> DMatrix<f64> {
        self.spec.uniform_to_standard(&lhs_sample(self.dim(), m, seed))
    }

    fn replacement_point(&self, seed: u64, purpose: &str, k: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, purpose, k);
        self.spec
            .standard_marginals()
            .iter()
            .map(|m| m.quantile(r.random_range(f64::EPSILON..1.0)))
            .collect()
    }

    /// Solve every row of `xi`. Failed rows are replaced by independent
    /// draws from the `purpose` stream until all succeed; more than
    /// `max_rate·rows` rejections abort.
    pub fn solve_design(
        &self,
        mut xi: DMatrix<f64>,
        seed: u64,
        purpose: &str,
        max_rate: f64,
    ) -> Result<SolvedDesign, PpfError> {
        let m = xi.nrows();
        let budget = (max_rate * m as f64).floor() as usize;
        let mut y = DMatrix::zeros(m, self.responses.len());
        let mut pending: Vec<usize> = (0..m).collect();
        let mut rejected = 0;
        loop {
            let sub = DMatrix::from_fn(pending.len(), xi.ncols(), |r, c| xi[(pending[r], c)]);
            let results = self.solve_rows(&sub);
            let mut failed = Vec::new();
            let mut last_error = None;
            for (&row, res) in pending.iter().zip(results) {
                match res {
                    Ok(v) => y.row_mut(row).copy_from_slice(&v),
                    Err(e) => {
                        failed.push(row);
                        last_error = Some(e);
                    }
                }
            }
            if failed.is_empty() {
                return Ok(SolvedDesign { xi, y, rejected });
            }
            rejected += failed.len();
            if rejected > budget {
                return Err(PpfError::TooManyFailedSolves {
                    rejected,
                    requested: m,
                    last_error: last_error.map(|e| e.to_string()).unwrap_or_default(),
                });
            }
            for (k, &row) in failed.iter().enumerate() {
                let p = self.replacement_point(seed, purpose, (rejected - failed.len() + k) as u64);
                xi.row_mut(row).copy_from_slice(&p);
            }
            pending = failed;
        }
    }
}
