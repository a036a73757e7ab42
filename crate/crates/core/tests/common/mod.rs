#![allow(dead_code)]

use biascal::models::{gradient, init_mlp, MlpModel, MlpParams, Precision};
use biascal::Dataset;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const FD_STEP: f64 = 1e-3;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random network with non-zero hidden biases and a random batch.
pub fn random_network_and_batch(seed: u64, batch: usize) -> (MlpModel, Dataset) {
    let mut r = rng(seed);
    let f = r.random_range(1..=12);
    let mut m = init_mlp(f, r.random()).unwrap();
    for b in m.params.b1.iter_mut().chain(m.params.b2.iter_mut()) {
        *b = r.random_range(-0.5f32..0.5);
    }
    m.bias = r.random_range(-2.0..2.0);
    let rows: Vec<Vec<f32>> = (0..batch)
        .map(|_| (0..f).map(|_| r.sample::<f32, _>(StandardNormal)).collect())
        .collect();
    let y = (0..batch).map(|_| r.sample::<f64, _>(StandardNormal) * 2.0).collect();
    (m, Dataset::from_rows(&rows, y).unwrap())
}

fn loss32(p: &MlpParams<f32>, bias: f64, batch: &Dataset) -> f64 {
    let s: f64 = batch
        .rows()
        .zip(batch.targets())
        .map(|(x, y)| {
            let r = y - p.predict(x, bias);
            r * r
        })
        .sum();
    s / batch.len() as f64
}

fn loss64(p: &MlpParams<f64>, bias: f64, batch: &Dataset) -> f64 {
    let s: f64 = batch
        .rows()
        .zip(batch.targets())
        .map(|(x, y)| {
            let x64: Vec<f64> = x.iter().map(|&v| f64::from(v)).collect();
            let r = y - p.predict(&x64, bias);
            r * r
        })
        .sum();
    s / batch.len() as f64
}

/// Central differences of the batch MSE, one parameter at a time; the
/// output bias comes last.
pub fn finite_difference(m: &MlpModel, batch: &Dataset, precision: Precision) -> Vec<f64> {
    let n = m.params.len();
    let mut out = Vec::with_capacity(n + 1);
    match precision {
        Precision::F32 => {
            let mut p = m.params.clone();
            for i in 0..n {
                let w = p.get(i);
                let (hi, lo) = (w + FD_STEP as f32, w - FD_STEP as f32);
                p.set(i, hi);
                let up = loss32(&p, m.bias, batch);
                p.set(i, lo);
                let down = loss32(&p, m.bias, batch);
                p.set(i, w);
                out.push((up - down) / (f64::from(hi) - f64::from(lo)));
            }
            out.push((loss32(&p, m.bias + FD_STEP, batch) - loss32(&p, m.bias - FD_STEP, batch)) / (2.0 * FD_STEP));
        }
        Precision::F64 => {
            let mut p = m.params.cast::<f64>();
            for i in 0..n {
                let w = p.get(i);
                p.set(i, w + FD_STEP);
                let up = loss64(&p, m.bias, batch);
                p.set(i, w - FD_STEP);
                let down = loss64(&p, m.bias, batch);
                p.set(i, w);
                out.push((up - down) / (2.0 * FD_STEP));
            }
            out.push((loss64(&p, m.bias + FD_STEP, batch) - loss64(&p, m.bias - FD_STEP, batch)) / (2.0 * FD_STEP));
        }
    }
    out
}

/// Backpropagated gradient flattened in the same order as [`finite_difference`].
pub fn backprop(m: &MlpModel, batch: &Dataset, precision: Precision) -> Vec<f64> {
    let g = gradient(m, batch, precision).unwrap();
    g.weights.flat().copied().chain(std::iter::once(g.bias)).collect()
}

/// Largest component-wise relative error `|a − b| / max(|a|, |b|, scale)`,
/// where `scale` is the largest backpropagated component. A central
/// difference at fixed step has an absolute error, so components far below
/// the gradient's scale are judged against that scale.
pub fn max_relative_error(backprop: &[f64], fd: &[f64]) -> f64 {
    let scale = backprop.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    backprop
        .iter()
        .zip(fd)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(scale))
        .fold(0.0, f64::max)
}
