use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Linear,
    SigmoidMixture,
    Piecewise,
}

/// Recipe for a synthetic regression task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_points: usize,
    pub n_features: usize,
    pub generator: GeneratorKind,
    pub noise_sigma: f64,
    /// Added to every target after the generator and noise; emulates a
    /// shifted target distribution.
    #[serde(default)]
    pub target_offset: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::Config("synthetic task needs at least 2 points".into()));
        }
        if self.n_features == 0 {
            return Err(Error::Config("synthetic task needs at least 1 feature".into()));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(Error::Config("noise_sigma must be finite and >= 0".into()));
        }
        if !self.target_offset.is_finite() {
            return Err(Error::Config("target_offset must be finite".into()));
        }
        Ok(())
    }
}

const MIXTURE_COMPONENTS: usize = 4;

/// Noise-free generating function; excludes `target_offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorParams {
    Linear {
        weights: Vec<f64>,
        intercept: f64,
    },
    /// `intercept + Σ_k amplitude_k · sigmoid(projection_k · x + shift_k)`
    SigmoidMixture {
        projections: Vec<Vec<f64>>,
        shifts: Vec<f64>,
        amplitudes: Vec<f64>,
        intercept: f64,
    },
    /// `intercept + Σ_j slope_j(x_j) · (x_j − knot_j)` with a different slope
    /// on each side of the knot.
    Piecewise {
        knots: Vec<f64>,
        slopes_below: Vec<f64>,
        slopes_above: Vec<f64>,
        intercept: f64,
    },
}

impl GeneratorParams {
    pub fn evaluate(&self, x: &[f32]) -> f64 {
        let x = x.iter().map(|&v| f64::from(v));
        match self {
            GeneratorParams::Linear { weights, intercept } => {
                weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + intercept
            }
            GeneratorParams::SigmoidMixture {
                projections,
                shifts,
                amplitudes,
                intercept,
            } => {
                let x: Vec<f64> = x.collect();
                let mut y = *intercept;
                for ((p, s), a) in projections.iter().zip(shifts).zip(amplitudes) {
                    let z = p.iter().zip(&x).map(|(w, v)| w * v).sum::<f64>() + s;
                    y += a / (1.0 + (-z).exp());
                }
                y
            }
            GeneratorParams::Piecewise {
                knots,
                slopes_below,
                slopes_above,
                intercept,
            } => {
                let mut y = *intercept;
                for (j, v) in x.enumerate() {
                    let d = v - knots[j];
                    y += if d < 0.0 {
                        slopes_below[j] * d
                    } else {
                        slopes_above[j] * d
                    };
                }
                y
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub data: Dataset,
    pub generator: GeneratorParams,
}

/// Draws a synthetic dataset. Features are i.i.d. standard normal (stored
/// as `f32`); targets are `generator(x) + N(0, noise_sigma²) + target_offset`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<SyntheticTask> {
    spec.validate()?;
    let f = spec.n_features;
    let mut rng = seed::rng(seed::derive_seed(spec.seed, Stream::Synthetic));
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };

    let generator = match spec.generator {
        GeneratorKind::Linear => GeneratorParams::Linear {
            weights: (0..f).map(|_| normal()).collect(),
            intercept: 5.0 + normal().abs(),
        },
        GeneratorKind::SigmoidMixture => GeneratorParams::SigmoidMixture {
            projections: (0..MIXTURE_COMPONENTS)
                .map(|_| (0..f).map(|_| 1.5 * normal() / (f as f64).sqrt()).collect())
                .collect(),
            shifts: (0..MIXTURE_COMPONENTS).map(|_| 0.5 * normal()).collect(),
            amplitudes: (0..MIXTURE_COMPONENTS).map(|_| 2.0 * normal()).collect(),
            intercept: 5.0 + normal().abs(),
        },
        GeneratorKind::Piecewise => GeneratorParams::Piecewise {
            knots: (0..f).map(|_| 0.5 * normal()).collect(),
            slopes_below: (0..f).map(|_| normal()).collect(),
            slopes_above: (0..f).map(|_| normal()).collect(),
            intercept: 5.0 + normal().abs(),
        },
    };

    let features: Vec<f32> = (0..spec.n_points * f).map(|_| normal() as f32).collect();
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let targets: Vec<f64> = features
        .chunks_exact(f)
        .map(|row| generator.evaluate(row) + noise.sample(&mut rng) + spec.target_offset)
        .collect();

    let names = (0..f).map(|j| format!("x{j}")).collect();
    Ok(SyntheticTask {
        data: Dataset::new(features, f, targets, names)?,
        generator,
    })
}
