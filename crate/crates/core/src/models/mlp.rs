//! Two-hidden-layer sigmoid network with input shortcuts.
//!
//! ```text
//! h1 = σ(W1 x + b1)            16 units
//! h2 = σ(W2 h1 + b2)           8 units
//! f  = a · h2 + s · x + b      a: output_hidden, s: output_shortcut
//! ```
//!
//! All weights are `f32`. The output bias `b` is kept apart as `f64`: it is
//! the one parameter bias correction touches.

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seed;

pub const HIDDEN_1: usize = 16;
pub const HIDDEN_2: usize = 8;

/// Every network weight except the output bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams<T> {
    pub n_features: usize,
    /// `HIDDEN_1 × n_features`, one row per hidden unit.
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    /// `HIDDEN_2 × HIDDEN_1`.
    pub w2: Vec<T>,
    pub b2: Vec<T>,
    pub output_hidden: Vec<T>,
    pub output_shortcut: Vec<T>,
}

#[inline]
fn sigmoid<T: Float>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

/// Hidden activations of one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct Activations<T> {
    pub h1: [T; HIDDEN_1],
    pub h2: [T; HIDDEN_2],
}

impl<T: Float> MlpParams<T> {
    pub fn zeros(n_features: usize) -> Self {
        Self {
            n_features,
            w1: vec![T::zero(); HIDDEN_1 * n_features],
            b1: vec![T::zero(); HIDDEN_1],
            w2: vec![T::zero(); HIDDEN_2 * HIDDEN_1],
            b2: vec![T::zero(); HIDDEN_2],
            output_hidden: vec![T::zero(); HIDDEN_2],
            output_shortcut: vec![T::zero(); n_features],
        }
    }

    /// Number of scalar weights (output bias excluded).
    pub fn len(&self) -> usize {
        self.w1.len()
            + self.b1.len()
            + self.w2.len()
            + self.b2.len()
            + self.output_hidden.len()
            + self.output_shortcut.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat view in the order w1, b1, w2, b2, output_hidden, output_shortcut.
    pub fn flat(&self) -> impl Iterator<Item = &T> + '_ {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .chain(&self.output_hidden)
            .chain(&self.output_shortcut)
    }

    pub fn flat_mut(&mut self) -> impl Iterator<Item = &mut T> + '_ {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
            .chain(self.output_hidden.iter_mut())
            .chain(self.output_shortcut.iter_mut())
    }

    pub fn get(&self, i: usize) -> T {
        *self.flat().nth(i).expect("parameter index in range")
    }

    pub fn set(&mut self, i: usize, v: T) {
        *self.flat_mut().nth(i).expect("parameter index in range") = v;
    }

    pub fn fill_zero(&mut self) {
        self.flat_mut().for_each(|v| *v = T::zero());
    }

    pub fn cast<U: Float>(&self) -> MlpParams<U> {
        let c = |v: &Vec<T>| v.iter().map(|x| U::from(*x).unwrap()).collect();
        MlpParams {
            n_features: self.n_features,
            w1: c(&self.w1),
            b1: c(&self.b1),
            w2: c(&self.w2),
            b2: c(&self.b2),
            output_hidden: c(&self.output_hidden),
            output_shortcut: c(&self.output_shortcut),
        }
    }

    /// Forward pass without the output bias: returns `a · h2 + s · x`.
    pub fn forward(&self, x: &[T]) -> (T, Activations<T>) {
        let f = self.n_features;
        let mut act = Activations {
            h1: [T::zero(); HIDDEN_1],
            h2: [T::zero(); HIDDEN_2],
        };
        for (k, h) in act.h1.iter_mut().enumerate() {
            let row = &self.w1[k * f..(k + 1) * f];
            let mut z = self.b1[k];
            for (w, &v) in row.iter().zip(x) {
                z = z + *w * v;
            }
            *h = sigmoid(z);
        }
        for (j, h) in act.h2.iter_mut().enumerate() {
            let row = &self.w2[j * HIDDEN_1..(j + 1) * HIDDEN_1];
            let mut z = self.b2[j];
            for (w, &v) in row.iter().zip(&act.h1) {
                z = z + *w * v;
            }
            *h = sigmoid(z);
        }
        let mut out = T::zero();
        for (a, &h) in self.output_hidden.iter().zip(&act.h2) {
            out = out + *a * h;
        }
        for (s, &v) in self.output_shortcut.iter().zip(x) {
            out = out + *s * v;
        }
        (out, act)
    }

    /// `forward(x) + bias`, with the bias added in `f64`.
    pub fn predict(&self, x: &[T], bias: f64) -> f64 {
        self.forward(x).0.to_f64().unwrap() + bias
    }

    /// Adds the contribution of one example to the gradient of the batch MSE
    /// `(1/B) Σ (y − f)²`, where `inv_batch = 1/B`. Returns the squared residual.
    #[allow(clippy::needless_range_loop)]
    pub(crate) fn accumulate_gradient(
        &self,
        bias: f64,
        x: &[T],
        y: f64,
        inv_batch: f64,
        grad: &mut MlpParams<T>,
        grad_bias: &mut f64,
    ) -> f64 {
        let f = self.n_features;
        let (core, act) = self.forward(x);
        let residual = y - (core.to_f64().unwrap() + bias);
        let g_out = -2.0 * residual * inv_batch;
        *grad_bias += g_out;
        let g = T::from(g_out).unwrap();

        let mut dz2 = [T::zero(); HIDDEN_2];
        for j in 0..HIDDEN_2 {
            let h = act.h2[j];
            grad.output_hidden[j] = grad.output_hidden[j] + g * h;
            dz2[j] = g * self.output_hidden[j] * h * (T::one() - h);
            grad.b2[j] = grad.b2[j] + dz2[j];
        }
        for (gs, &v) in grad.output_shortcut.iter_mut().zip(x) {
            *gs = *gs + g * v;
        }
        let mut dh1 = [T::zero(); HIDDEN_1];
        for j in 0..HIDDEN_2 {
            let row = j * HIDDEN_1;
            for k in 0..HIDDEN_1 {
                grad.w2[row + k] = grad.w2[row + k] + dz2[j] * act.h1[k];
                dh1[k] = dh1[k] + dz2[j] * self.w2[row + k];
            }
        }
        for k in 0..HIDDEN_1 {
            let h = act.h1[k];
            let dz1 = dh1[k] * h * (T::one() - h);
            grad.b1[k] = grad.b1[k] + dz1;
            let row = &mut grad.w1[k * f..(k + 1) * f];
            for (gw, &v) in row.iter_mut().zip(x) {
                *gw = *gw + dz1 * v;
            }
        }
        residual * residual
    }
}

/// The network: `f32` weights plus the distinct `f64` output bias.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub params: MlpParams<f32>,
    pub bias: f64,
}

impl MlpModel {
    pub fn n_features(&self) -> usize {
        self.params.n_features
    }

    pub fn predict(&self, x: &[f32]) -> f64 {
        self.params.predict(x, self.bias)
    }
}

/// Uniform Glorot initialisation, biases zero, deterministic per seed.
///
/// Each layer draws from `±sqrt(6 / (fan_in + fan_out))`. The output layer
/// sees `[h2; x]`, so its fan-in is `HIDDEN_2 + n_features`.
pub fn init_mlp(n_features: usize, seed: u64) -> Result<MlpModel> {
    if n_features == 0 {
        return Err(Error::Shape("network needs at least one input".into()));
    }
    let mut rng = seed::rng(seed);
    let mut draw = |n: usize, fan_in: usize, fan_out: usize| -> Vec<f32> {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        (0..n).map(|_| rng.random_range(-limit..limit) as f32).collect()
    };
    let w1 = draw(HIDDEN_1 * n_features, n_features, HIDDEN_1);
    let w2 = draw(HIDDEN_2 * HIDDEN_1, HIDDEN_1, HIDDEN_2);
    let output_hidden = draw(HIDDEN_2, HIDDEN_2 + n_features, 1);
    let output_shortcut = draw(n_features, HIDDEN_2 + n_features, 1);
    Ok(MlpModel {
        params: MlpParams {
            n_features,
            w1,
            b1: vec![0.0; HIDDEN_1],
            w2,
            b2: vec![0.0; HIDDEN_2],
            output_hidden,
            output_shortcut,
        },
        bias: 0.0,
    })
}

/// Arithmetic used for a gradient evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    /// Forward and backward in `f32`, as during training.
    F32,
    /// Weights and inputs widened to `f64`; for verification.
    F64,
}

/// Parameter-shaped gradient of the batch MSE.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub weights: MlpParams<f64>,
    pub bias: f64,
    /// Batch MSE at the evaluated parameters.
    pub loss: f64,
}

/// Backpropagated gradient of the mean squared error over `batch`.
pub fn gradient(model: &MlpModel, batch: &Dataset, precision: Precision) -> Result<MlpGradient> {
    if batch.n_features() != model.n_features() {
        return Err(Error::Shape(format!(
            "batch has {} features, network expects {}",
            batch.n_features(),
            model.n_features()
        )));
    }
    let inv = 1.0 / batch.len() as f64;
    let mut grad_bias = 0.0;
    let mut sq = 0.0;
    let weights = match precision {
        Precision::F32 => {
            let mut g = MlpParams::<f32>::zeros(model.n_features());
            for (x, &y) in batch.rows().zip(batch.targets()) {
                sq += model
                    .params
                    .accumulate_gradient(model.bias, x, y, inv, &mut g, &mut grad_bias);
            }
            g.cast::<f64>()
        }
        Precision::F64 => {
            let p = model.params.cast::<f64>();
            let mut g = MlpParams::<f64>::zeros(model.n_features());
            let mut x64 = vec![0.0; model.n_features()];
            for (x, &y) in batch.rows().zip(batch.targets()) {
                for (d, &s) in x64.iter_mut().zip(x) {
                    *d = f64::from(s);
                }
                sq += p.accumulate_gradient(model.bias, &x64, y, inv, &mut g, &mut grad_bias);
            }
            g
        }
    };
    Ok(MlpGradient {
        weights,
        bias: grad_bias,
        loss: sq * inv,
    })
}
