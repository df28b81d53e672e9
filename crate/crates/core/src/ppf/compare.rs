use serde::{Deserialize, Serialize};

use super::{PpfError, ResponseStatistics, Timings};
use crate::powerflow::ResponseId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseComparison {
    pub response: ResponseId,
    pub mean_ref: f64,
    pub mean_test: f64,
    pub std_ref: f64,
    pub std_test: f64,
    /// (test − ref)/ref · 100; `None` when the reference is zero.
    pub mean_error_pct: Option<f64>,
    pub std_error_pct: Option<f64>,
    pub reference_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub responses: Vec<ResponseComparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_test: Option<Timings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_ref: Option<Timings>,
}

fn relative_pct(test: f64, reference: f64) -> Option<f64> {
    (reference != 0.0).then(|| (test - reference) / reference * 100.0)
}

/// Relative mean and standard-deviation errors of `test` against the
/// reference run, response by response.
pub fn compare(
    test: &[ResponseStatistics],
    reference: &[ResponseStatistics],
    timings_test: Option<Timings>,
    timings_ref: Option<Timings>,
) -> Result<ComparisonReport, PpfError> {
    let ids_t: Vec<ResponseId> = test.iter().map(|s| s.response).collect();
    let ids_r: Vec<ResponseId> = reference.iter().map(|s| s.response).collect();
    if ids_t != ids_r {
        let only = |a: &[ResponseId], b: &[ResponseId]| -> Vec<String> {
            a.iter().filter(|x| !b.contains(x)).map(|x| x.to_string()).collect()
        };
        return Err(PpfError::ResponseMismatch {
            only_test: only(&ids_t, &ids_r),
            only_ref: only(&ids_r, &ids_t),
        });
    }
    let responses = test
        .iter()
        .zip(reference)
        .map(|(t, r)| {
            let mean_error_pct = relative_pct(t.mean, r.mean);
            let std_error_pct = relative_pct(t.std, r.std);
            ResponseComparison {
                response: t.response,
                mean_ref: r.mean,
                mean_test: t.mean,
                std_ref: r.std,
                std_test: t.std,
                reference_zero: mean_error_pct.is_none() || std_error_pct.is_none(),
                mean_error_pct,
                std_error_pct,
            }
        })
        .collect();
    Ok(ComparisonReport {
        responses,
        timings_test,
        timings_ref,
    })
}
