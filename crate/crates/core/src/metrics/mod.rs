//! Evaluation quantities: MSE, R², absolute and relative total error,
//! relative systematic error, plus trial aggregation and accumulation curves.
//!
//! All sums are computed with [`CompensatedSum`](crate::sum::CompensatedSum),
//! so totals over tens of thousands of residuals are exact up to one final
//! rounding.

mod aggregate;
mod curve;

pub use aggregate::{aggregate_trials, mean_and_se, AggregateReport, MeanSe, TrialReports};
pub use curve::{accumulation_curve, default_grid, trial_curve, AccumulationCurve, CURVE_CSV_HEADER};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::{sum_finite, CompensatedSum};

/// Checks that `predictions` and `targets` are equally long, non-empty and finite.
pub(crate) fn check_pair(predictions: &[f64], targets: &[f64]) -> Result<()> {
    if predictions.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if targets.is_empty() {
        return Err(Error::InsufficientData("no points to evaluate".into()));
    }
    for (what, values) in [("predictions", predictions), ("targets", targets)] {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            log::debug!("non-finite {what} at {index}");
            return Err(Error::NonFinite {
                index,
                value: values[index],
            });
        }
    }
    Ok(())
}

fn residuals<'a>(predictions: &'a [f64], targets: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
    targets.iter().zip(predictions).map(|(y, f)| y - f)
}

/// Mean squared error.
pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_pair(predictions, targets)?;
    let ss = sum_finite(residuals(predictions, targets).map(|r| r * r));
    Ok(ss / targets.len() as f64)
}

/// Coefficient of determination, `1 − SS_res / SS_tot`, with `SS_tot`
/// centred on the mean of `targets` themselves.
pub fn r_squared(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_pair(predictions, targets)?;
    let mean = sum_finite(targets.iter().copied()) / targets.len() as f64;
    let ss_tot = sum_finite(targets.iter().map(|y| (y - mean) * (y - mean)));
    if ss_tot <= 0.0 {
        return Err(Error::DegenerateTargets);
    }
    let ss_res = sum_finite(residuals(predictions, targets).map(|r| r * r));
    Ok(1.0 - ss_res / ss_tot)
}

/// Signed sum of residuals `Σ (y − f(x))`.
pub fn signed_total_error(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_pair(predictions, targets)?;
    Ok(sum_finite(residuals(predictions, targets)))
}

/// Absolute total error: `|Σ (y − f(x))|`.
pub fn total_error(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    signed_total_error(predictions, targets).map(f64::abs)
}

/// `|Σ y|`, or an error when it vanishes relative to `Σ |y|`.
pub(crate) fn target_sum_denominator(targets: &[f64]) -> Result<f64> {
    let sum = sum_finite(targets.iter().copied()).abs();
    let scale = sum_finite(targets.iter().map(|y| y.abs()));
    if sum <= 1e-12 * scale || sum == 0.0 {
        return Err(Error::UndefinedDenominator);
    }
    Ok(sum)
}

/// Relative total error `Δ / |Σ y|` as a fraction (multiply by 100 for percent).
pub fn relative_total_error(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    let delta = total_error(predictions, targets)?;
    Ok(delta / target_sum_denominator(targets)?)
}

/// Relative systematic error in percent: `100/N · Σ (y − f(x)) / y`.
pub fn relative_systematic_error(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check_pair(predictions, targets)?;
    if let Some(index) = targets.iter().position(|y| y.abs() <= 1e-12) {
        return Err(Error::ZeroTarget { index });
    }
    let mut acc = CompensatedSum::new();
    for (y, f) in targets.iter().zip(predictions) {
        acc.add((y - f) / y);
    }
    Ok(100.0 * acc.value() / targets.len() as f64)
}

/// All metrics for one model on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mse: f64,
    pub r2: f64,
    /// Signed residual sum; `delta_abs` is its magnitude.
    pub residual_sum: f64,
    pub delta_abs: f64,
    /// Fraction, `None` when `Σ y` vanishes.
    pub delta_rel: Option<f64>,
    /// Percent, `None` when some target is zero.
    pub rse: Option<f64>,
    pub n: usize,
}

impl EvalReport {
    pub fn evaluate(predictions: &[f64], targets: &[f64]) -> Result<Self> {
        let residual_sum = signed_total_error(predictions, targets)?;
        let delta_abs = residual_sum.abs();
        let delta_rel = match target_sum_denominator(targets) {
            Ok(den) => Some(delta_abs / den),
            Err(Error::UndefinedDenominator) => None,
            Err(e) => return Err(e),
        };
        let rse = match relative_systematic_error(predictions, targets) {
            Ok(v) => Some(v),
            Err(Error::ZeroTarget { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            mse: mse(predictions, targets)?,
            r2: r_squared(predictions, targets)?,
            residual_sum,
            delta_abs,
            delta_rel,
            rse,
            n: targets.len(),
        })
    }
}
