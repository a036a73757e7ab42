//! Error-free summation.
//!
//! Every residual sum in the toolkit goes through [`CompensatedSum`], which
//! keeps a list of non-overlapping partial sums (Shewchuk's algorithm, the
//! same scheme as Python's `math.fsum`). The final value is the exact sum of
//! the inputs rounded once to the nearest `f64`, so the result does not
//! depend on the order in which values were added.

use crate::error::{Error, Result};

/// Running sum with exact partials.
#[derive(Debug, Clone, Default)]
pub struct CompensatedSum {
    partials: Vec<f64>,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one value. Inputs are assumed finite.
    pub fn add(&mut self, value: f64) {
        let mut x = value;
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// The exact sum of everything added so far, correctly rounded.
    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // Round-half-even correction when the remaining partials push the
        // tail past the halfway point.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            let yr = x - hi;
            if y == yr {
                hi = x;
            }
        }
        hi
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for v in iter {
            self.add(v);
        }
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        acc.extend(iter);
        acc
    }
}

/// Sums `values` exactly, rejecting NaN and infinities.
pub fn compensated_sum(values: &[f64]) -> Result<f64> {
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    Ok(sum_finite(values.iter().copied()))
}

/// Exact sum of an iterator whose items are already known to be finite.
pub(crate) fn sum_finite<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Exact mean of finite values; `None` for an empty slice.
pub(crate) fn mean_finite(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(sum_finite(values.iter().copied()) / values.len() as f64)
    }
}
