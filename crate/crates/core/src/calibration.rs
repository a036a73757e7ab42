//! Output-bias correction.
//!
//! For fixed non-bias parameters, the MSE on a calibration set is minimised
//! over the output bias `b` exactly when the residuals on that set sum to
//! zero. The optimal shift is therefore the mean residual
//! `δ_b = (Σ y − Σ f(x)) / N`, and the corrected model is `b ← b + δ_b`.
//! Nothing else in the model changes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::{Dataset, SplitIndices};
use crate::error::{Error, Result};
use crate::metrics::check_pair;
use crate::models::RegressionModel;
use crate::sum::sum_finite;

/// A computed bias shift and where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasCorrection {
    /// Amount added to the output bias, in target units.
    #[serde(serialize_with = "to_decimal", deserialize_with = "from_decimal")]
    pub delta_b: f64,
    pub n_calibration: usize,
    pub source_tag: String,
}

fn to_decimal<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{v:?}"))
}

fn from_decimal<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    let s = String::deserialize(d)?;
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| serde::de::Error::custom(format!("invalid delta_b {s:?}")))
}

impl BiasCorrection {
    pub fn new(delta_b: f64, n_calibration: usize, source_tag: impl Into<String>) -> Result<Self> {
        if !delta_b.is_finite() {
            return Err(Error::NonFinite {
                index: 0,
                value: delta_b,
            });
        }
        if n_calibration == 0 {
            return Err(Error::InsufficientData("correction computed from no points".into()));
        }
        Ok(Self {
            delta_b,
            n_calibration,
            source_tag: source_tag.into(),
        })
    }

    pub fn with_source(mut self, source_tag: impl Into<String>) -> Self {
        self.source_tag = source_tag.into();
        self
    }
}

/// Mean residual of `predictions` against `targets`, summed exactly.
pub fn compute_delta_b(predictions: &[f64], targets: &[f64]) -> Result<BiasCorrection> {
    check_pair(predictions, targets)?;
    let residual_sum = sum_finite(targets.iter().zip(predictions).map(|(y, f)| y - f));
    BiasCorrection::new(residual_sum / targets.len() as f64, targets.len(), "")
}

/// Returns a copy of `model` whose output bias is shifted by `delta_b`.
/// All other parameters are untouched; a zero shift returns an identical model.
pub fn apply_correction(model: &RegressionModel, correction: &BiasCorrection) -> RegressionModel {
    let mut out = model.clone();
    if correction.delta_b != 0.0 {
        out.set_bias(model.bias() + correction.delta_b);
    }
    out
}

/// Predicts over `data`, computes the shift, applies it.
pub fn calibrate_on(
    model: &RegressionModel,
    data: &Dataset,
    source_tag: &str,
) -> Result<(RegressionModel, BiasCorrection)> {
    let predictions = model.predict_dataset(data)?;
    let correction = compute_delta_b(&predictions, data.targets())?.with_source(source_tag);
    Ok((apply_correction(model, &correction), correction))
}

/// Which part of the model-development data the shift is computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CalibrationSource {
    Train,
    Val,
    /// Union of training and validation data.
    #[default]
    TrainVal,
}

impl CalibrationSource {
    pub fn tag(self) -> &'static str {
        match self {
            CalibrationSource::Train => "train",
            CalibrationSource::Val => "val",
            CalibrationSource::TrainVal => "train+val",
        }
    }

    pub fn indices(self, split: &SplitIndices) -> Vec<usize> {
        match self {
            CalibrationSource::Train => split.train.clone(),
            CalibrationSource::Val => split.val.clone(),
            CalibrationSource::TrainVal => split.development(),
        }
    }
}

impl fmt::Display for CalibrationSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for CalibrationSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(CalibrationSource::Train),
            "val" => Ok(CalibrationSource::Val),
            "train+val" => Ok(CalibrationSource::TrainVal),
            other => Err(Error::Config(format!(
                "calibration source must be train, val or train+val, got {other:?}"
            ))),
        }
    }
}

impl Serialize for CalibrationSource {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

impl<'de> Deserialize<'de> for CalibrationSource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}
