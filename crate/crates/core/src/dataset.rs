//! In-memory datasets and split index sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A feature matrix (row-major, 32-bit) paired with 64-bit scalar targets.
///
/// Construction rejects non-finite values and shape mismatches, so every
/// `Dataset` in circulation is safe to feed to models and metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f32>,
    n_features: usize,
    targets: Vec<f64>,
    feature_names: Vec<String>,
}

impl Dataset {
    pub fn new(features: Vec<f32>, n_features: usize, targets: Vec<f64>, feature_names: Vec<String>) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Shape("dataset needs at least one feature".into()));
        }
        if targets.is_empty() {
            return Err(Error::InsufficientData("dataset has no rows".into()));
        }
        if features.len() != targets.len() * n_features {
            return Err(Error::Shape(format!(
                "{} feature values do not form {} rows of {} features",
                features.len(),
                targets.len(),
                n_features
            )));
        }
        if feature_names.len() != n_features {
            return Err(Error::Shape(format!(
                "{} feature names for {} features",
                feature_names.len(),
                n_features
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCell {
                what: "features",
                row: pos / n_features,
                column: pos % n_features,
            });
        }
        if let Some(row) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCell {
                what: "targets",
                row,
                column: n_features,
            });
        }
        Ok(Self {
            features,
            n_features,
            targets,
            feature_names,
        })
    }

    /// Builds a dataset from per-row feature vectors, naming features `x0`, `x1`, ...
    pub fn from_rows(rows: &[Vec<f32>], targets: Vec<f64>) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n_features) {
            return Err(Error::Shape(format!(
                "row {bad} has {} features, expected {n_features}",
                rows[bad].len()
            )));
        }
        if rows.len() != targets.len() {
            return Err(Error::Shape(format!(
                "{} rows but {} targets",
                rows.len(),
                targets.len()
            )));
        }
        let names = (0..n_features).map(|j| format!("x{j}")).collect();
        Self::new(rows.concat(), n_features, targets, names)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.features.chunks_exact(self.n_features)
    }

    pub fn features(&self) -> &[f32] {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Copies the given rows, in the given order, into a new dataset.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InsufficientData("empty row selection".into()));
        }
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::Bounds(format!(
                    "row index {i} out of range for {} rows",
                    self.len()
                )));
            }
            features.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        Ok(Self {
            features,
            n_features: self.n_features,
            targets,
            feature_names: self.feature_names.clone(),
        })
    }

    /// Same targets and names with a replacement feature matrix.
    pub fn with_features(&self, features: Vec<f32>) -> Result<Self> {
        Self::new(
            features,
            self.n_features,
            self.targets.clone(),
            self.feature_names.clone(),
        )
    }
}

/// Disjoint train / validation / test row indices into one source dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

impl SplitIndices {
    /// Validates that the three lists partition `0..n`.
    pub fn new(train: Vec<usize>, val: Vec<usize>, test: Vec<usize>, seed: u64, n: usize) -> Result<Self> {
        let mut seen = vec![false; n];
        for &i in train.iter().chain(&val).chain(&test) {
            if i >= n {
                return Err(Error::Bounds(format!("split index {i} out of range 0..{n}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Config(format!("split index {i} appears twice")));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Config(format!("split does not cover index {missing}")));
        }
        Ok(Self { train, val, test, seed })
    }

    /// Everything available for model development: train followed by val.
    pub fn development(&self) -> Vec<usize> {
        let mut all = Vec::with_capacity(self.train.len() + self.val.len());
        all.extend_from_slice(&self.train);
        all.extend_from_slice(&self.val);
        all
    }

    pub fn total(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }
}
