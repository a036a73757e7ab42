use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::sum::mean_finite;

/// Constant predictor. The constant doubles as the output bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanModel {
    pub mean: f64,
    pub n_features: usize,
}

impl MeanModel {
    pub fn predict(&self, _x: &[f32]) -> f64 {
        self.mean
    }
}

/// The (exactly summed) mean of the training targets.
pub fn fit_mean(data: &Dataset) -> MeanModel {
    MeanModel {
        mean: mean_finite(data.targets()).expect("datasets are never empty"),
        n_features: data.n_features(),
    }
}
