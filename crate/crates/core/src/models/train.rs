//! Mini-batch Adam on the mean squared error with best-validation selection.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::mlp::{init_mlp, MlpModel, MlpParams};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::mse;
use crate::seed::{self, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            learning_rate: 1e-2,
            batch_size: 64,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if self.adam_epsilon.is_nan() || self.adam_epsilon <= 0.0 {
            return Err(Error::Config("adam_epsilon must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Size-weighted mean of the mini-batch losses seen during the epoch.
    pub train_mse: f64,
    /// Validation MSE after the epoch's last update.
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
}

impl TrainingLog {
    pub fn best(&self) -> &EpochRecord {
        &self.epochs[self.best_epoch - 1]
    }
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: MlpParams<f32>,
    v: MlpParams<f32>,
    m_bias: f64,
    v_bias: f64,
}

impl Adam {
    fn new(config: &TrainConfig, n_features: usize) -> Self {
        Self {
            lr: config.learning_rate,
            beta1: config.adam_beta1,
            beta2: config.adam_beta2,
            eps: config.adam_epsilon,
            step: 0,
            m: MlpParams::zeros(n_features),
            v: MlpParams::zeros(n_features),
            m_bias: 0.0,
            v_bias: 0.0,
        }
    }

    fn update(&mut self, model: &mut MlpModel, grad: &MlpParams<f32>, grad_bias: f64) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2) = (self.beta1 as f32, self.beta2 as f32);
        let (lr, eps) = (self.lr as f32, self.eps as f32);
        let (c1f, c2f) = (c1 as f32, c2 as f32);
        for (((p, &g), m), v) in model
            .params
            .flat_mut()
            .zip(grad.flat())
            .zip(self.m.flat_mut())
            .zip(self.v.flat_mut())
        {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1f;
            let v_hat = *v / c2f;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        self.m_bias = self.beta1 * self.m_bias + (1.0 - self.beta1) * grad_bias;
        self.v_bias = self.beta2 * self.v_bias + (1.0 - self.beta2) * grad_bias * grad_bias;
        let m_hat = self.m_bias / c1;
        let v_hat = self.v_bias / c2;
        model.bias -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
    }
}

fn predictions(model: &MlpModel, data: &Dataset) -> Vec<f64> {
    data.rows().map(|r| model.predict(r)).collect()
}

/// Trains a freshly initialised network for `config.epochs` epochs and
/// returns the parameters from the epoch with the lowest validation MSE
/// (earliest epoch on ties), together with the per-epoch log.
///
/// Initialisation and the per-epoch reshuffles draw from separate streams
/// derived from `config.seed`. The final partial mini-batch of each epoch is
/// kept.
pub fn train_mlp(train: &Dataset, val: &Dataset, config: &TrainConfig) -> Result<(MlpModel, TrainingLog)> {
    config.validate()?;
    if train.n_features() != val.n_features() {
        return Err(Error::Shape(format!(
            "train has {} features, validation {}",
            train.n_features(),
            val.n_features()
        )));
    }
    let f = train.n_features();
    let mut model = init_mlp(f, seed::derive_seed(config.seed, Stream::Init))?;
    let mut shuffle_rng = seed::rng(seed::derive_seed(config.seed, Stream::Shuffle));
    let mut adam = Adam::new(config, f);
    let mut grad = MlpParams::<f32>::zeros(f);
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut log = TrainingLog {
        epochs: Vec::with_capacity(config.epochs),
        best_epoch: 0,
    };
    let mut best: Option<(f64, MlpModel)> = None;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad.fill_zero();
            let mut grad_bias = 0.0;
            let inv = 1.0 / batch.len() as f64;
            for &i in batch {
                loss_sum += model.params.accumulate_gradient(
                    model.bias,
                    train.row(i),
                    train.targets()[i],
                    inv,
                    &mut grad,
                    &mut grad_bias,
                );
            }
            adam.update(&mut model, &grad, grad_bias);
        }
        let train_mse = loss_sum / train.len() as f64;
        if !train_mse.is_finite() || !model.bias.is_finite() || model.params.flat().any(|p| !p.is_finite()) {
            return Err(Error::TrainingDiverged { epoch });
        }
        let val_mse = mse(&predictions(&model, val), val.targets()).map_err(|_| Error::TrainingDiverged { epoch })?;
        log::trace!("epoch {epoch}: train {train_mse:.6} val {val_mse:.6}");
        log.epochs.push(EpochRecord {
            epoch,
            train_mse,
            val_mse,
        });
        if best.as_ref().is_none_or(|(b, _)| val_mse < *b) {
            best = Some((val_mse, model.clone()));
            log.best_epoch = epoch;
        }
    }
    let (_, model) = best.expect("at least one epoch ran");
    Ok((model, log))
}
