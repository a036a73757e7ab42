use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::sum::sum_finite;

/// Per-feature z-score statistics (sample std, n−1 denominator).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Fits column means and standard deviations. Needs at least two rows.
    pub fn fit(data: &Dataset) -> Result<Self> {
        let n = data.len();
        if n < 2 {
            return Err(Error::InsufficientData("standardizer needs at least 2 rows".into()));
        }
        let f = data.n_features();
        let mut mean = Vec::with_capacity(f);
        let mut std = Vec::with_capacity(f);
        for j in 0..f {
            let col: Vec<f64> = data.rows().map(|r| f64::from(r[j])).collect();
            let m = sum_finite(col.iter().copied()) / n as f64;
            let ss = sum_finite(col.iter().map(|v| (v - m) * (v - m)));
            let s = (ss / (n - 1) as f64).sqrt();
            if s.is_nan() || s <= 1e-12 {
                return Err(Error::DegenerateFeature {
                    column: j,
                    name: data.feature_names()[j].clone(),
                });
            }
            mean.push(m);
            std.push(s);
        }
        Ok(Self { mean, std })
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Standardizes one row into `out` (f64).
    pub fn transform_row_into(&self, row: &[f32], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = (f64::from(row[j]) - self.mean[j]) / self.std[j];
        }
    }

    /// Standardizes a flat row-major matrix, returning 32-bit features.
    pub fn apply(&self, features: &[f32]) -> Result<Vec<f32>> {
        let f = self.n_features();
        if !features.len().is_multiple_of(f) {
            return Err(Error::Shape(format!(
                "{} values are not a multiple of {f} features",
                features.len()
            )));
        }
        Ok(features
            .chunks_exact(f)
            .flat_map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| ((f64::from(v) - self.mean[j]) / self.std[j]) as f32)
            })
            .collect())
    }

    pub fn invert(&self, features: &[f32]) -> Result<Vec<f32>> {
        let f = self.n_features();
        if !features.len().is_multiple_of(f) {
            return Err(Error::Shape(format!(
                "{} values are not a multiple of {f} features",
                features.len()
            )));
        }
        Ok(features
            .chunks_exact(f)
            .flat_map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| (f64::from(v) * self.std[j] + self.mean[j]) as f32)
            })
            .collect())
    }

    /// Standardized copy of `data`; targets are untouched.
    pub fn apply_dataset(&self, data: &Dataset) -> Result<Dataset> {
        if data.n_features() != self.n_features() {
            return Err(Error::Shape(format!(
                "standardizer has {} features, dataset {}",
                self.n_features(),
                data.n_features()
            )));
        }
        data.with_features(self.apply(data.features())?)
    }
}

pub fn fit_standardizer(data: &Dataset) -> Result<Standardizer> {
    Standardizer::fit(data)
}

pub fn apply_standardizer(stats: &Standardizer, features: &[f32]) -> Result<Vec<f32>> {
    stats.apply(features)
}
