//! Regressors of the form `f(x) = aᵀ h(x) + b` with an exposed scalar
//! output bias `b`.

mod linear;
mod mean;
mod mlp;
mod serialize;
mod train;

pub use linear::{fit_linear, LinearModel};
pub use mean::{fit_mean, MeanModel};
pub use mlp::{gradient, init_mlp, Activations, MlpGradient, MlpModel, MlpParams, Precision, HIDDEN_1, HIDDEN_2};
pub use serialize::{ModelDocument, MODEL_FORMAT_VERSION};
pub use train::{train_mlp, EpochRecord, TrainConfig, TrainingLog};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Standardizer;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Mlp,
    Mean,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Linear => "linear",
            ModelKind::Mlp => "mlp",
            ModelKind::Mean => "mean",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ModelKind::Linear),
            "mlp" => Ok(ModelKind::Mlp),
            "mean" => Ok(ModelKind::Mean),
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    Linear(LinearModel),
    Mlp(MlpModel),
    Mean(MeanModel),
}

impl Predictor {
    pub fn kind(&self) -> ModelKind {
        match self {
            Predictor::Linear(_) => ModelKind::Linear,
            Predictor::Mlp(_) => ModelKind::Mlp,
            Predictor::Mean(_) => ModelKind::Mean,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Predictor::Linear(m) => m.n_features(),
            Predictor::Mlp(m) => m.n_features(),
            Predictor::Mean(m) => m.n_features,
        }
    }

    fn predict(&self, x: &[f32]) -> f64 {
        match self {
            Predictor::Linear(m) => m.predict(x),
            Predictor::Mlp(m) => m.predict(x),
            Predictor::Mean(m) => m.predict(x),
        }
    }

    pub fn bias(&self) -> f64 {
        match self {
            Predictor::Linear(m) => m.bias,
            Predictor::Mlp(m) => m.bias,
            Predictor::Mean(m) => m.mean,
        }
    }

    fn bias_mut(&mut self) -> &mut f64 {
        match self {
            Predictor::Linear(m) => &mut m.bias,
            Predictor::Mlp(m) => &mut m.bias,
            Predictor::Mean(m) => &mut m.mean,
        }
    }
}

/// A trained predictor plus the feature standardizer it was trained
/// behind. `predict` consumes raw features.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    predictor: Predictor,
    standardizer: Option<Standardizer>,
}

impl RegressionModel {
    pub fn new(predictor: Predictor, standardizer: Option<Standardizer>) -> Result<Self> {
        if let Some(s) = &standardizer {
            if s.n_features() != predictor.n_features() {
                return Err(Error::Shape(format!(
                    "standardizer has {} features, model {}",
                    s.n_features(),
                    predictor.n_features()
                )));
            }
        }
        Ok(Self {
            predictor,
            standardizer,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.predictor.kind()
    }

    pub fn predictor(&self) -> &Predictor {
        &self.predictor
    }

    pub fn standardizer(&self) -> Option<&Standardizer> {
        self.standardizer.as_ref()
    }

    pub fn n_features(&self) -> usize {
        self.predictor.n_features()
    }

    /// The distinct scalar output bias `b`.
    pub fn bias(&self) -> f64 {
        self.predictor.bias()
    }

    pub fn set_bias(&mut self, bias: f64) {
        *self.predictor.bias_mut() = bias;
    }

    fn predict_with(&self, x: &[f32], buf: &mut Vec<f32>) -> f64 {
        match &self.standardizer {
            None => self.predictor.predict(x),
            Some(s) => {
                buf.clear();
                buf.extend(
                    x.iter()
                        .enumerate()
                        .map(|(j, &v)| ((f64::from(v) - s.mean[j]) / s.std[j]) as f32),
                );
                self.predictor.predict(buf)
            }
        }
    }

    pub fn predict(&self, x: &[f32]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::Shape(format!(
                "input has {} features, model expects {}",
                x.len(),
                self.n_features()
            )));
        }
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: j,
                value: f64::from(x[j]),
            });
        }
        Ok(self.predict_with(x, &mut Vec::new()))
    }

    /// Predictions for every row of `data`.
    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.n_features() != self.n_features() {
            return Err(Error::Shape(format!(
                "dataset has {} features, model expects {}",
                data.n_features(),
                self.n_features()
            )));
        }
        let mut buf = Vec::with_capacity(data.n_features());
        Ok(data.rows().map(|r| self.predict_with(r, &mut buf)).collect())
    }
}
