use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::sum::sum_finite;

/// Pivots below this fraction of the largest pivot count as zero.
const SINGULARITY_THRESHOLD: f64 = 1e-10;

/// `f(x) = weights · x + bias`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        Self { weights, bias }
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, x: &[f32]) -> f64 {
        let mut acc = 0.0;
        for (w, &v) in self.weights.iter().zip(x) {
            acc += w * f64::from(v);
        }
        acc + self.bias
    }
}

/// Ordinary least squares with intercept.
///
/// Features and targets are centred first, so the intercept is
/// `mean(y) − w · mean(x)` and the residuals sum to zero regardless of how
/// accurately the slope system is solved. The centred normal equations are
/// solved with a diagonally pivoted Cholesky factorisation; a pivot below
/// `1e-10` of the largest one marks its column as dependent.
pub fn fit_linear(data: &Dataset) -> Result<LinearModel> {
    let n = data.len();
    let f = data.n_features();
    if n <= f {
        return Err(Error::InsufficientData(format!(
            "{n} rows cannot determine {f} weights and an intercept"
        )));
    }
    let column = |j: usize| data.rows().map(move |r| f64::from(r[j]));
    let x_mean: Vec<f64> = (0..f).map(|j| sum_finite(column(j)) / n as f64).collect();
    let y = data.targets();
    let y_mean = sum_finite(y.iter().copied()) / n as f64;

    let mut gram = vec![0.0; f * f];
    let mut rhs = vec![0.0; f];
    let mut xc = vec![0.0; f];
    for (row, &yi) in data.rows().zip(y) {
        for j in 0..f {
            xc[j] = f64::from(row[j]) - x_mean[j];
        }
        let yc = yi - y_mean;
        for a in 0..f {
            rhs[a] += xc[a] * yc;
            for b in a..f {
                gram[a * f + b] += xc[a] * xc[b];
            }
        }
    }
    for a in 0..f {
        for b in 0..a {
            gram[a * f + b] = gram[b * f + a];
        }
    }

    let weights = solve_pivoted_cholesky(gram, rhs, f).map_err(|dependent| Error::Singular {
        columns: dependent.into_iter().map(|j| data.feature_names()[j].clone()).collect(),
    })?;
    let bias = y_mean - weights.iter().zip(&x_mean).map(|(w, m)| w * m).sum::<f64>();
    Ok(LinearModel { weights, bias })
}

/// Solves `A w = b` for symmetric positive semi-definite `A` (row-major
/// `f × f`). On rank deficiency returns the indices of the columns whose
/// pivots fell below the threshold.
fn solve_pivoted_cholesky(mut a: Vec<f64>, mut b: Vec<f64>, f: usize) -> std::result::Result<Vec<f64>, Vec<usize>> {
    let mut perm: Vec<usize> = (0..f).collect();
    let max_pivot = (0..f).map(|i| a[i * f + i]).fold(0.0, f64::max);
    if max_pivot.is_nan() || max_pivot <= 0.0 {
        return Err(perm);
    }

    // In-place L such that P A Pᵀ = L Lᵀ, stored in the lower triangle.
    for k in 0..f {
        let (p, pivot) = (k..f)
            .map(|i| (i, a[i * f + i]))
            .fold((k, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
        if pivot <= SINGULARITY_THRESHOLD * max_pivot {
            let mut dependent: Vec<usize> = perm[k..].to_vec();
            dependent.sort_unstable();
            return Err(dependent);
        }
        if p != k {
            for c in 0..f {
                a.swap(k * f + c, p * f + c);
            }
            for r in 0..f {
                a.swap(r * f + k, r * f + p);
            }
            perm.swap(k, p);
            b.swap(k, p);
        }
        let d = a[k * f + k].sqrt();
        a[k * f + k] = d;
        for i in k + 1..f {
            a[i * f + k] /= d;
        }
        for i in k + 1..f {
            for j in k + 1..=i {
                a[i * f + j] -= a[i * f + k] * a[j * f + k];
            }
            // keep symmetric copy for the pivot search
            for j in k + 1..i {
                a[j * f + i] = a[i * f + j];
            }
        }
    }

    // Forward then back substitution.
    let mut z = b;
    for i in 0..f {
        let mut s = z[i];
        for j in 0..i {
            s -= a[i * f + j] * z[j];
        }
        z[i] = s / a[i * f + i];
    }
    for i in (0..f).rev() {
        let mut s = z[i];
        for j in i + 1..f {
            s -= a[j * f + i] * z[j];
        }
        z[i] = s / a[i * f + i];
    }
    let mut w = vec![0.0; f];
    for (k, &orig) in perm.iter().enumerate() {
        w[orig] = z[k];
    }
    Ok(w)
}
