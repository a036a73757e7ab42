//! End-to-end experiment runner.
//!
//! Each trial `t` uses the seed `base_seed + t` for its split, network
//! initialisation and mini-batch order. Per trial and model kind the runner
//! fits the model, evaluates it on the model-development data and the test
//! set, shifts its bias by the mean residual on the calibration set and
//! evaluates again. Trials run in parallel; results are ordered by trial
//! index and all files are written once at the end.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::calibration::{calibrate_on, BiasCorrection, CalibrationSource};
use crate::data::{
    expand_paths, generate_synthetic, load_csv, make_split, CsvSchema, SplitSpec, Standardizer, SynthSpec,
};
use crate::dataset::{Dataset, SplitIndices};
use crate::error::{Error, Result};
use crate::metrics::{
    accumulation_curve, aggregate_trials, default_grid, trial_curve, AccumulationCurve, AggregateReport, EvalReport,
    MeanSe, TrialReports, CURVE_CSV_HEADER,
};
use crate::models::{fit_linear, fit_mean, train_mlp, ModelKind, Predictor, RegressionModel, TrainConfig};
use crate::seed::{derive_seed, Stream};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Csv {
        schema: CsvSchema,
        /// Files or directories of `*.csv` files, concatenated in order.
        paths: Vec<PathBuf>,
        #[serde(default)]
        expected_rows: Option<usize>,
    },
    Synthetic {
        spec: SynthSpec,
    },
}

impl DataSource {
    pub fn validate(&self) -> Result<()> {
        match self {
            DataSource::Csv { schema, paths, .. } => {
                schema.validate()?;
                if paths.is_empty() {
                    return Err(Error::Config("csv data source lists no paths".into()));
                }
                if let Some(p) = paths.iter().find(|p| !p.exists()) {
                    return Err(Error::Config(format!("data path {} does not exist", p.display())));
                }
                Ok(())
            }
            DataSource::Synthetic { spec } => spec.validate(),
        }
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::Csv {
                schema,
                paths,
                expected_rows,
            } => load_csv(&expand_paths(paths)?, schema, *expected_rows),
            DataSource::Synthetic { spec } => Ok(generate_synthetic(spec)?.data),
        }
    }
}

fn default_trials() -> usize {
    10
}

fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::Linear, ModelKind::Mlp]
}

/// One JSON document describing a full experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub split: SplitSpec,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    /// Network training settings. Its `seed` is replaced by the trial seed.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub calibration_source: CalibrationSource,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Prefix sizes for the accumulation curves; log-spaced when absent.
    #[serde(default)]
    pub curve_grid: Option<Vec<usize>>,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be >= 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no model kinds selected".into()));
        }
        let mut kinds = self.models.clone();
        kinds.sort();
        if kinds.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("model kinds must be distinct".into()));
        }
        if self.models.contains(&ModelKind::Mlp) {
            self.train.validate()?;
        }
        self.data.validate()
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.base_seed.wrapping_add(trial as u64)
    }

    pub fn trial_split(&self, data: &Dataset, trial: usize) -> Result<SplitIndices> {
        make_split(
            data.len(),
            &self.split,
            derive_seed(self.trial_seed(trial), Stream::Split),
        )
    }

    pub fn curve_grid_for(&self, test_size: usize) -> Vec<usize> {
        self.curve_grid.clone().unwrap_or_else(|| default_grid(test_size))
    }
}

/// A fitted model with its selection record.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub model: RegressionModel,
    pub best_epoch: Option<usize>,
    pub best_val_mse: Option<f64>,
}

/// Fits one model kind for a split.
///
/// Features are standardized with statistics from the training part. The
/// network is trained on the training part and selected on the validation
/// part; the linear and mean models use all model-development data.
pub fn fit_model(
    kind: ModelKind,
    data: &Dataset,
    split: &SplitIndices,
    train_config: &TrainConfig,
    seed: u64,
) -> Result<FittedModel> {
    let train_raw = data.select(&split.train)?;
    match kind {
        ModelKind::Mean => Ok(FittedModel {
            model: RegressionModel::new(Predictor::Mean(fit_mean(&data.select(&split.development())?)), None)?,
            best_epoch: None,
            best_val_mse: None,
        }),
        ModelKind::Linear => {
            let stats = Standardizer::fit(&train_raw)?;
            let dev = stats.apply_dataset(&data.select(&split.development())?)?;
            Ok(FittedModel {
                model: RegressionModel::new(Predictor::Linear(fit_linear(&dev)?), Some(stats))?,
                best_epoch: None,
                best_val_mse: None,
            })
        }
        ModelKind::Mlp => {
            let stats = Standardizer::fit(&train_raw)?;
            let train = stats.apply_dataset(&train_raw)?;
            let val = stats.apply_dataset(&data.select(&split.val)?)?;
            let config = TrainConfig {
                seed,
                ..train_config.clone()
            };
            let (mlp, log) = train_mlp(&train, &val, &config)?;
            Ok(FittedModel {
                model: RegressionModel::new(Predictor::Mlp(mlp), Some(stats))?,
                best_epoch: Some(log.best_epoch),
                best_val_mse: Some(log.best().val_mse),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub kind: ModelKind,
    pub model_file: PathBuf,
    pub corrected_model_file: PathBuf,
    pub best_epoch: Option<usize>,
    pub best_val_mse: Option<f64>,
    pub correction: BiasCorrection,
    pub uncorrected: TrialReports,
    pub corrected: TrialReports,
    /// Corrected model on the calibration set.
    pub calibration: EvalReport,
    /// Δ per curve grid size on this trial's test set.
    pub curve_uncorrected: Vec<f64>,
    pub curve_corrected: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub split: SplitIndices,
    pub models: Vec<ModelRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub tool_version: String,
    /// True iff every trial finished and every output was written.
    pub complete: bool,
    pub config: ExperimentConfig,
    pub data_rows: usize,
    /// SHA-256 over the little-endian feature and target bytes.
    pub data_sha256: String,
    pub curve_seed: u64,
    pub curve_grid: Vec<usize>,
    pub trials: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
}

/// Table row label: the model kind, with `+corrected` for the shifted model.
pub fn row_label(kind: ModelKind, corrected: bool) -> String {
    if corrected {
        format!("{kind}+corrected")
    } else {
        kind.to_string()
    }
}

/// Aggregated results, one row per model variant in configuration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<(String, AggregateReport)>,
}

pub const TABLE_CSV_HEADER: &str = "model,r2_train_mean,r2_train_se,r2_test_mean,r2_test_se,\
delta_train_mean,delta_train_se,delta_test_mean,delta_test_se,rel_test_mean,rel_test_se";

impl ResultsTable {
    pub fn row(&self, label: &str) -> Option<&AggregateReport> {
        self.rows.iter().find(|(l, _)| l == label).map(|(_, r)| r)
    }

    /// CSV with full-precision decimals, or with the rounding of the
    /// published table (R² and δ to two decimals, Δ to integers).
    pub fn to_csv(&self, round_like_paper: bool) -> String {
        let fmt = |v: f64, decimals: usize| {
            if round_like_paper {
                format!("{v:.decimals$}")
            } else {
                format!("{v:?}")
            }
        };
        let pair = |m: &MeanSe, d: usize| format!("{},{}", fmt(m.mean, d), fmt(m.se, d));
        let mut out = String::from(TABLE_CSV_HEADER);
        out.push('\n');
        for (label, r) in &self.rows {
            let rel = r.rel_test.as_ref().map_or_else(|| ",".to_string(), |m| pair(m, 2));
            let _ = writeln!(
                out,
                "{label},{},{},{},{},{rel}",
                pair(&r.r2_train, 2),
                pair(&r.r2_test, 2),
                pair(&r.delta_train, 0),
                pair(&r.delta_test, 0)
            );
        }
        out
    }
}

impl Serialize for ResultsTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.rows.len()))?;
        for (label, report) in &self.rows {
            map.serialize_entry(label, report)?;
        }
        map.end()
    }
}

/// Everything a run produces, in memory.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub table: ResultsTable,
    pub curves: Vec<(String, AccumulationCurve)>,
    pub manifest: Manifest,
    pub models: Vec<Vec<(RegressionModel, RegressionModel)>>,
}

struct TrialOutput {
    record: TrialRecord,
    models: Vec<(RegressionModel, RegressionModel)>,
    test_predictions: Vec<(Vec<f64>, Vec<f64>)>,
    test_targets: Vec<f64>,
}

fn model_path(trial: usize, label: &str) -> PathBuf {
    Path::new("models")
        .join(trial.to_string())
        .join(format!("{label}.json"))
}

fn run_trial(config: &ExperimentConfig, data: &Dataset, trial: usize, curve_seed: u64) -> Result<TrialOutput> {
    let seed = config.trial_seed(trial);
    let split = config.trial_split(data, trial)?;
    let dev = data.select(&split.development())?;
    let test = data.select(&split.test)?;
    let calib = data.select(&config.calibration_source.indices(&split))?;
    let grid = config.curve_grid_for(test.len());

    let mut records = Vec::with_capacity(config.models.len());
    let mut models = Vec::with_capacity(config.models.len());
    let mut test_predictions = Vec::with_capacity(config.models.len());
    for &kind in &config.models {
        let fitted = fit_model(kind, data, &split, &config.train, seed)?;
        let reports = |m: &RegressionModel| -> Result<(TrialReports, Vec<f64>)> {
            let test_pred = m.predict_dataset(&test)?;
            Ok((
                TrialReports {
                    train: EvalReport::evaluate(&m.predict_dataset(&dev)?, dev.targets())?,
                    test: EvalReport::evaluate(&test_pred, test.targets())?,
                },
                test_pred,
            ))
        };
        let (uncorrected, pred_before) = reports(&fitted.model)?;
        let (corrected_model, correction) = calibrate_on(&fitted.model, &calib, config.calibration_source.tag())?;
        let (corrected, pred_after) = reports(&corrected_model)?;
        let calibration = EvalReport::evaluate(&corrected_model.predict_dataset(&calib)?, calib.targets())?;
        let (curve_uncorrected, _) = trial_curve(&pred_before, test.targets(), &grid, curve_seed)?;
        let (curve_corrected, _) = trial_curve(&pred_after, test.targets(), &grid, curve_seed)?;
        log::info!(
            "trial {trial} {kind}: R² test {:.4}, Δ test {:.3} -> {:.3}, δ_b {:?}",
            uncorrected.test.r2,
            uncorrected.test.delta_abs,
            corrected.test.delta_abs,
            correction.delta_b
        );
        records.push(ModelRecord {
            kind,
            model_file: model_path(trial, &row_label(kind, false)),
            corrected_model_file: model_path(trial, &row_label(kind, true)),
            best_epoch: fitted.best_epoch,
            best_val_mse: fitted.best_val_mse,
            correction,
            uncorrected,
            corrected,
            calibration,
            curve_uncorrected,
            curve_corrected,
        });
        models.push((fitted.model, corrected_model));
        test_predictions.push((pred_before, pred_after));
    }
    Ok(TrialOutput {
        record: TrialRecord {
            trial,
            seed,
            split,
            models: records,
        },
        models,
        test_predictions,
        test_targets: test.targets().to_vec(),
    })
}

pub fn data_digest(data: &Dataset) -> String {
    let mut h = Sha256::new();
    for v in data.features() {
        h.update(v.to_le_bytes());
    }
    for v in data.targets() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// Aggregates per-trial records into the results table.
pub fn build_table(config: &ExperimentConfig, trials: &[TrialRecord]) -> Result<ResultsTable> {
    let mut rows = Vec::with_capacity(2 * config.models.len());
    for (m, &kind) in config.models.iter().enumerate() {
        for corrected in [false, true] {
            let reports: Vec<TrialReports> = trials
                .iter()
                .map(|t| {
                    let r = &t.models[m];
                    if corrected {
                        r.corrected.clone()
                    } else {
                        r.uncorrected.clone()
                    }
                })
                .collect();
            rows.push((row_label(kind, corrected), aggregate_trials(&reports)?));
        }
    }
    Ok(ResultsTable { rows })
}

/// Runs all trials in memory on an already loaded dataset.
///
/// At most `jobs` trials run at once (all cores when `None`). The result
/// holds only the trials that succeeded; failures are listed in the
/// manifest, which is then marked incomplete.
pub fn execute(config: &ExperimentConfig, data: &Dataset, jobs: Option<usize>) -> Result<ExperimentRun> {
    config.validate()?;
    let curve_seed = config.base_seed;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<TrialOutput>> = pool.install(|| {
        (0..config.n_trials)
            .into_par_iter()
            .map(|t| run_trial(config, data, t, curve_seed))
            .collect()
    });

    let mut done = Vec::new();
    let mut failures = Vec::new();
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => done.push(o),
            Err(e) => {
                log::error!("trial {trial} failed: {e}");
                failures.push(TrialFailure {
                    trial,
                    seed: config.trial_seed(trial),
                    message: e.to_string(),
                });
            }
        }
    }
    if done.is_empty() {
        return Err(Error::TrialsFailed {
            failed: failures.len(),
            total: config.n_trials,
        });
    }

    let test_size = done[0].test_targets.len();
    let grid = config.curve_grid_for(test_size);
    let records: Vec<TrialRecord> = done.iter().map(|o| o.record.clone()).collect();
    let table = build_table(config, &records)?;
    let targets: Vec<Vec<f64>> = done.iter().map(|o| o.test_targets.clone()).collect();
    let mut curves = Vec::with_capacity(2 * config.models.len());
    for (m, &kind) in config.models.iter().enumerate() {
        for corrected in [false, true] {
            let preds: Vec<Vec<f64>> = done
                .iter()
                .map(|o| {
                    let (before, after) = &o.test_predictions[m];
                    if corrected {
                        after.clone()
                    } else {
                        before.clone()
                    }
                })
                .collect();
            curves.push((
                row_label(kind, corrected),
                accumulation_curve(&preds, &targets, &grid, curve_seed)?,
            ));
        }
    }
    let manifest = Manifest {
        format_version: MANIFEST_FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        complete: failures.is_empty(),
        config: config.clone(),
        data_rows: data.len(),
        data_sha256: data_digest(data),
        curve_seed,
        curve_grid: grid,
        trials: records,
        failures,
    };
    Ok(ExperimentRun {
        table,
        curves,
        manifest,
        models: done.into_iter().map(|o| o.models).collect(),
    })
}

/// CSV of all accumulation curves with a leading model column.
pub fn curves_csv(curves: &[(String, AccumulationCurve)]) -> String {
    let mut out = format!("model,{CURVE_CSV_HEADER}\n");
    for (label, curve) in curves {
        for row in curve.csv_rows() {
            let _ = writeln!(out, "{label},{row}");
        }
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub jobs: Option<usize>,
    pub round_like_paper: bool,
}

/// Writes table.json, table.csv, curves.csv, the per-trial models and
/// manifest.json under `dir`. The manifest is written last.
pub fn write_outputs(run: &mut ExperimentRun, dir: &Path, round_like_paper: bool) -> Result<()> {
    let written = (|| -> Result<()> {
        let table_json = serde_json::json!({
            "n_trials": run.manifest.trials.len(),
            "calibration_source": run.manifest.config.calibration_source,
            "rel_test_unit": "percent",
            "models": &run.table,
        });
        write_file(&dir.join("table.json"), &serde_json::to_string_pretty(&table_json)?)?;
        write_file(&dir.join("table.csv"), &run.table.to_csv(round_like_paper))?;
        write_file(&dir.join("curves.csv"), &curves_csv(&run.curves))?;
        for (record, models) in run.manifest.trials.iter().zip(&run.models) {
            for (m, (before, after)) in record.models.iter().zip(models) {
                write_file(&dir.join(&m.model_file), &before.to_json()?)?;
                write_file(&dir.join(&m.corrected_model_file), &after.to_json()?)?;
            }
        }
        Ok(())
    })();
    if let Err(e) = &written {
        log::error!("writing outputs failed: {e}");
        run.manifest.complete = false;
    }
    write_file(
        &dir.join("manifest.json"),
        &serde_json::to_string_pretty(&run.manifest)?,
    )?;
    written
}

/// Loads the data, runs every trial and writes all outputs to
/// `config.output_dir`. Fails if any trial or any write failed; outputs of
/// the successful trials are still written with the manifest marked
/// incomplete.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<ExperimentRun> {
    config.validate()?;
    let data = config.data.load()?;
    log::info!("loaded {} rows with {} features", data.len(), data.n_features());
    let mut run = execute(config, &data, options.jobs)?;
    write_outputs(&mut run, &config.output_dir, options.round_like_paper)?;
    if !run.manifest.failures.is_empty() {
        return Err(Error::TrialsFailed {
            failed: run.manifest.failures.len(),
            total: config.n_trials,
        });
    }
    Ok(run)
}
