use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::SplitIndices;
use crate::error::{Error, Result};
use crate::seed;

/// Sizes of the three splits, either absolute or as fractions of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSpec {
    /// `[train, val, test]` row counts; must sum to `n`.
    Counts([usize; 3]),
    /// `[train, val, test]` fractions; must sum to 1. Train and val are
    /// rounded to the nearest row, test takes the remainder.
    Fractions([f64; 3]),
}

impl SplitSpec {
    /// The gradient / validation / test sizes of the gas-turbine protocol.
    pub fn gas_turbine() -> Self {
        SplitSpec::Counts([16_733, 5_000, 15_000])
    }

    pub fn counts(&self, n: usize) -> Result<[usize; 3]> {
        let counts = match *self {
            SplitSpec::Counts(c) => {
                if c.iter().sum::<usize>() != n {
                    return Err(Error::Config(format!(
                        "split counts {c:?} sum to {}, dataset has {n} rows",
                        c.iter().sum::<usize>()
                    )));
                }
                c
            }
            SplitSpec::Fractions(f) => {
                if f.iter().any(|v| !(0.0..=1.0).contains(v)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "split fractions {f:?} must be in [0, 1] and sum to 1"
                    )));
                }
                let train = (f[0] * n as f64).round() as usize;
                let val = ((f[1] * n as f64).round() as usize).min(n - train.min(n));
                [train.min(n), val, n - train.min(n) - val]
            }
        };
        for (name, c) in ["train", "val", "test"].iter().zip(counts) {
            if c < 2 {
                return Err(Error::InsufficientData(format!(
                    "{name} split would hold {c} rows; at least 2 are required"
                )));
            }
        }
        Ok(counts)
    }
}

/// Randomly partitions `0..n` into train / val / test.
///
/// A ChaCha8 stream seeded with `seed` shuffles `0..n`; the first block
/// becomes train, the next val, the rest test. Each list is returned sorted.
pub fn make_split(n: usize, spec: &SplitSpec, seed: u64) -> Result<SplitIndices> {
    let [n_train, n_val, _] = spec.counts(n)?;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed::rng(seed));
    let mut train = perm[..n_train].to_vec();
    let mut val = perm[n_train..n_train + n_val].to_vec();
    let mut test = perm[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    SplitIndices::new(train, val, test, seed, n)
}
