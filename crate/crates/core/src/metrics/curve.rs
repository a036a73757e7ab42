use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{aggregate::mean_and_se, check_pair};
use crate::error::{Error, Result};
use crate::seed::{self, Stream};
use crate::sum::CompensatedSum;

/// Absolute and relative total error as a function of test-prefix size,
/// averaged over trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumulationCurve {
    pub prefix_sizes: Vec<usize>,
    pub delta_abs_mean: Vec<f64>,
    pub delta_abs_se: Vec<f64>,
    /// Fractions, not percent.
    pub delta_rel_mean: Vec<f64>,
    pub delta_rel_se: Vec<f64>,
    pub n_trials: usize,
}

pub const CURVE_CSV_HEADER: &str = "size,delta_mean,delta_se,rel_mean,rel_se";

impl AccumulationCurve {
    /// One line per grid size, in the column order of [`CURVE_CSV_HEADER`].
    pub fn csv_rows(&self) -> impl Iterator<Item = String> + '_ {
        (0..self.prefix_sizes.len()).map(move |i| {
            format!(
                "{},{},{},{},{}",
                self.prefix_sizes[i],
                self.delta_abs_mean[i],
                self.delta_abs_se[i],
                self.delta_rel_mean[i],
                self.delta_rel_se[i]
            )
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CURVE_CSV_HEADER);
        out.push('\n');
        for row in self.csv_rows() {
            out.push_str(&row);
            out.push('\n');
        }
        out
    }

    /// Least-squares slope of mean Δ against prefix size.
    pub fn delta_slope(&self) -> f64 {
        let n = self.prefix_sizes.len() as f64;
        if self.prefix_sizes.len() < 2 {
            return 0.0;
        }
        let xs: Vec<f64> = self.prefix_sizes.iter().map(|&s| s as f64).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let my = self.delta_abs_mean.iter().sum::<f64>() / n;
        let sxy: f64 = xs
            .iter()
            .zip(&self.delta_abs_mean)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }
}

/// Twenty log-spaced prefix sizes from 50 (or `test_size` if smaller) up to
/// `test_size`, rounded, de-duplicated, ending exactly at `test_size`.
pub fn default_grid(test_size: usize) -> Vec<usize> {
    const POINTS: usize = 20;
    const START: usize = 50;
    if test_size == 0 {
        return Vec::new();
    }
    let start = START.min(test_size) as f64;
    let (lo, hi) = (start.ln(), (test_size as f64).ln());
    let mut grid: Vec<usize> = (0..POINTS)
        .map(|i| {
            let t = i as f64 / (POINTS - 1) as f64;
            ((lo + t * (hi - lo)).exp().round() as usize).clamp(1, test_size)
        })
        .collect();
    grid.dedup();
    *grid.last_mut().unwrap() = test_size;
    grid.dedup();
    grid
}

/// Per-trial Δ and δ along nested random prefixes.
///
/// The test set is shuffled once with a permutation drawn from `seed`; each
/// grid size `g` evaluates the first `g` points of that order. Two models
/// evaluated with the same seed on the same test set see the same prefixes.
pub fn trial_curve(predictions: &[f64], targets: &[f64], grid: &[usize], seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_pair(predictions, targets)?;
    check_grid(grid, targets.len())?;
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.shuffle(&mut seed::rng(seed::derive_seed(seed, Stream::Curve)));

    let mut residual_sum = CompensatedSum::new();
    let mut target_sum = CompensatedSum::new();
    let mut target_abs = CompensatedSum::new();
    let (mut deltas, mut rels) = (Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()));
    let mut taken = 0;
    for &g in grid {
        for &i in &order[taken..g] {
            residual_sum.add(targets[i] - predictions[i]);
            target_sum.add(targets[i]);
            target_abs.add(targets[i].abs());
        }
        taken = g;
        let delta = residual_sum.value().abs();
        let denom = target_sum.value().abs();
        if denom <= 1e-12 * target_abs.value() || denom == 0.0 {
            return Err(Error::UndefinedDenominator);
        }
        deltas.push(delta);
        rels.push(delta / denom);
    }
    Ok((deltas, rels))
}

fn check_grid(grid: &[usize], test_size: usize) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("empty prefix grid".into()));
    }
    if grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!(
            "prefix grid must be strictly increasing positive sizes: {grid:?}"
        )));
    }
    let last = *grid.last().unwrap();
    if last > test_size {
        return Err(Error::Bounds(format!(
            "prefix size {last} exceeds test set size {test_size}"
        )));
    }
    Ok(())
}

/// Accumulation curve over trials: mean and SE of Δ and δ per grid size.
pub fn accumulation_curve(
    per_trial_predictions: &[Vec<f64>],
    per_trial_targets: &[Vec<f64>],
    grid: &[usize],
    seed: u64,
) -> Result<AccumulationCurve> {
    if per_trial_predictions.is_empty() {
        return Err(Error::InsufficientData("no trials for accumulation curve".into()));
    }
    if per_trial_predictions.len() != per_trial_targets.len() {
        return Err(Error::Shape(format!(
            "{} prediction sets for {} target sets",
            per_trial_predictions.len(),
            per_trial_targets.len()
        )));
    }
    let per_trial = per_trial_predictions
        .iter()
        .zip(per_trial_targets)
        .map(|(p, y)| trial_curve(p, y, grid, seed))
        .collect::<Result<Vec<_>>>()?;

    let n = grid.len();
    let mut curve = AccumulationCurve {
        prefix_sizes: grid.to_vec(),
        delta_abs_mean: Vec::with_capacity(n),
        delta_abs_se: Vec::with_capacity(n),
        delta_rel_mean: Vec::with_capacity(n),
        delta_rel_se: Vec::with_capacity(n),
        n_trials: per_trial.len(),
    };
    for i in 0..n {
        let d = mean_and_se(&per_trial.iter().map(|(d, _)| d[i]).collect::<Vec<_>>())?;
        let r = mean_and_se(&per_trial.iter().map(|(_, r)| r[i]).collect::<Vec<_>>())?;
        curve.delta_abs_mean.push(d.mean);
        curve.delta_abs_se.push(d.se);
        curve.delta_rel_mean.push(r.mean);
        curve.delta_rel_se.push(r.se);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::total_error;
    use proptest::prelude::*;

    fn targets(n: usize) -> Vec<f64> {
        (0..n).map(|i| 1.0 + (i % 17) as f64 * 0.75).collect()
    }

    #[test]
    fn perfect_model_is_flat_zero() {
        let y = targets(300);
        let c = accumulation_curve(
            std::slice::from_ref(&y),
            std::slice::from_ref(&y),
            &default_grid(300),
            1,
        )
        .unwrap();
        assert!(c.delta_abs_mean.iter().all(|&d| d == 0.0));
        assert!(c.delta_rel_mean.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn constant_offset_is_linear() {
        let y = targets(500);
        let f: Vec<f64> = y.iter().map(|v| v - 0.5).collect();
        let grid = default_grid(500);
        let c = accumulation_curve(&[f], &[y], &grid, 3).unwrap();
        for (g, d) in grid.iter().zip(&c.delta_abs_mean) {
            assert_eq!(*d, *g as f64 * 0.5);
        }
        assert!((c.delta_slope() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_trials_have_zero_se() {
        let y = targets(200);
        let f: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + (i % 3) as f64 - 1.2).collect();
        let grid = default_grid(200);
        let c = accumulation_curve(&[f.clone(), f.clone()], &[y.clone(), y.clone()], &grid, 9).unwrap();
        assert!(c.delta_abs_se.iter().all(|&s| s == 0.0));
        assert!(c.delta_rel_se.iter().all(|&s| s == 0.0));
        assert_eq!(*c.delta_abs_mean.last().unwrap(), total_error(&f, &y).unwrap());
    }

    #[test]
    fn grid_bounds() {
        let y = targets(10);
        assert!(matches!(
            accumulation_curve(std::slice::from_ref(&y), std::slice::from_ref(&y), &[5, 11], 0),
            Err(Error::Bounds(_))
        ));
        assert!(accumulation_curve(std::slice::from_ref(&y), std::slice::from_ref(&y), &[5, 5], 0).is_err());
        assert!(accumulation_curve(&[], &[], &[5], 0).is_err());
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid(15_000);
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 50);
        assert_eq!(*g.last().unwrap(), 15_000);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(default_grid(30), vec![30]);
        let small = default_grid(60);
        assert!(small.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*small.last().unwrap(), 60);
    }

    #[test]
    fn csv_layout() {
        let y = targets(100);
        let c = accumulation_curve(std::slice::from_ref(&y), std::slice::from_ref(&y), &[10, 100], 0).unwrap();
        let csv = c.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CURVE_CSV_HEADER);
        assert_eq!(lines[1], "10,0,0,0,0");
        assert_eq!(lines.len(), 3);
    }

    proptest! {
        #[test]
        fn full_prefix_is_permutation_independent(
            res in prop::collection::vec(-5.0f64..5.0, 2..100),
            seed_a in any::<u64>(),
            seed_b in any::<u64>(),
        ) {
            let y: Vec<f64> = (0..res.len()).map(|i| 10.0 + i as f64).collect();
            let f: Vec<f64> = y.iter().zip(&res).map(|(a, r)| a - r).collect();
            let n = y.len();
            let a = trial_curve(&f, &y, &[n], seed_a).unwrap();
            let b = trial_curve(&f, &y, &[n], seed_b).unwrap();
            prop_assert_eq!(a.0[0], b.0[0]);
            prop_assert_eq!(a.0[0], total_error(&f, &y).unwrap());
        }
    }
}
