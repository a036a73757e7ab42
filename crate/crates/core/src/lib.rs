//! Post-hoc output-bias correction for least-squares regression.
//!
//! After any training procedure, the scalar output bias of a regressor can
//! be shifted by the mean residual on a calibration set. The residuals on
//! that set then sum to zero, which removes the systematic error that
//! otherwise grows linearly when predictions are summed over many points.
//!
//! The crate provides the regressors ([`models`]), the correction itself
//! ([`calibration`]), evaluation metrics including absolute and relative
//! total error ([`metrics`]), dataset handling ([`data`]) and an experiment
//! runner that reproduces the gas-turbine CO study end to end
//! ([`experiment`]).

pub mod calibration;
pub mod data;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod models;
pub mod seed;
pub mod sum;

pub use calibration::{apply_correction, calibrate_on, compute_delta_b, BiasCorrection, CalibrationSource};
pub use dataset::{Dataset, SplitIndices};
pub use error::{Error, Result};
pub use metrics::EvalReport;
pub use models::{ModelKind, RegressionModel};
pub use sum::compensated_sum;
