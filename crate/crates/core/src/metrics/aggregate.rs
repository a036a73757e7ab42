use serde::{Deserialize, Serialize};

use super::EvalReport;
use crate::error::{Error, Result};
use crate::sum::sum_finite;

/// Mean and standard error of one metric over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

/// Mean and standard error (`sample std / √n`, n−1 denominator). One value
/// gives SE 0.
pub fn mean_and_se(values: &[f64]) -> Result<MeanSe> {
    if values.is_empty() {
        return Err(Error::InsufficientData("no values to aggregate".into()));
    }
    let n = values.len() as f64;
    let mean = sum_finite(values.iter().copied()) / n;
    if values.len() == 1 {
        return Ok(MeanSe { mean, se: 0.0 });
    }
    let var = sum_finite(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
    Ok(MeanSe {
        mean,
        se: (var / n).sqrt(),
    })
}

/// Reports for one trial: on the model-development data and on the test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReports {
    pub train: EvalReport,
    pub test: EvalReport,
}

/// Per-metric mean ± SE over trials (the columns of the results table).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub r2_train: MeanSe,
    pub r2_test: MeanSe,
    pub delta_train: MeanSe,
    pub delta_test: MeanSe,
    /// Relative total error on the test set, in percent. `None` if any trial
    /// had a vanishing test target sum.
    pub rel_test: Option<MeanSe>,
    pub n_trials: usize,
}

pub fn aggregate_trials(reports: &[TrialReports]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::InsufficientData("no trials to aggregate".into()));
    }
    let collect =
        |f: fn(&TrialReports) -> f64| -> Result<MeanSe> { mean_and_se(&reports.iter().map(f).collect::<Vec<_>>()) };
    let rel: Option<Vec<f64>> = reports.iter().map(|r| r.test.delta_rel.map(|v| 100.0 * v)).collect();
    Ok(AggregateReport {
        r2_train: collect(|r| r.train.r2)?,
        r2_test: collect(|r| r.test.r2)?,
        delta_train: collect(|r| r.train.delta_abs)?,
        delta_test: collect(|r| r.test.delta_abs)?,
        rel_test: rel.map(|v| mean_and_se(&v)).transpose()?,
        n_trials: reports.len(),
    })
}
