//! Acceptance criteria. Prints one PASS / FAIL / BLOCKED line per criterion
//! and exits non-zero if any criterion fails.
//!
//! Criteria 7 to 11 need the UCI gas-turbine CSV files. They are read from
//! `$BIASCAL_GAS_TURBINE_DIR`, or from `data/gas-turbine` in the workspace.
//! Without the files those criteria are reported as BLOCKED.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biascal::calibration::{calibrate_on, CalibrationSource};
use biascal::data::{generate_synthetic, GeneratorKind, SplitSpec, Standardizer, SynthSpec};
use biascal::experiment::{execute, run_experiment, DataSource, ExperimentConfig, ExperimentRun, RunOptions};
use biascal::metrics::{default_grid, total_error, trial_curve};
use biascal::models::{fit_linear, init_mlp, LinearModel, MeanModel, Precision, Predictor, TrainConfig};
use biascal::{Dataset, ModelKind, RegressionModel};
use num::{BigRational, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::StandardNormal;

enum Status {
    Pass,
    Fail,
    Blocked,
}

struct Line {
    id: &'static str,
    name: &'static str,
    status: Status,
    detail: String,
}

fn check(id: &'static str, name: &'static str, ok: bool, detail: String) -> Line {
    Line {
        id,
        name,
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

/// Exact `Σ (y − p)` of the given floating-point values.
fn exact_residual_sum(pred: &[f64], y: &[f64]) -> BigRational {
    pred.iter()
        .zip(y)
        .fold(BigRational::zero(), |acc, (p, t)| acc + exact(*t) - exact(*p))
}

fn exact_mse(pred: &[f64], y: &[f64]) -> BigRational {
    let s = pred.iter().zip(y).fold(BigRational::zero(), |acc, (p, t)| {
        let r = exact(*t) - exact(*p);
        acc + &r * &r
    });
    s / BigRational::from_integer(pred.len().into())
}

fn abs_sum(y: &[f64]) -> f64 {
    y.iter().map(|v| v.abs()).sum()
}

fn random_features(r: &mut impl Rng, n: usize, f: usize) -> Vec<Vec<f32>> {
    let scale: Vec<f64> = (0..f).map(|_| r.random_range(0.1..10.0)).collect();
    let shift: Vec<f64> = (0..f).map(|_| r.random_range(-10.0..10.0)).collect();
    (0..n)
        .map(|_| {
            (0..f)
                .map(|j| (shift[j] + scale[j] * r.sample::<f64, _>(StandardNormal)) as f32)
                .collect()
        })
        .collect()
}

fn random_targets(r: &mut impl Rng, rows: &[Vec<f32>]) -> Vec<f64> {
    let f = rows[0].len();
    let w: Vec<f64> = (0..f).map(|_| r.sample(StandardNormal)).collect();
    let offset = r.random_range(-100.0..100.0);
    let noise = r.random_range(0.01..5.0);
    rows.iter()
        .map(|x| {
            offset
                + x.iter().zip(&w).map(|(v, w)| f64::from(*v) * w).sum::<f64>()
                + noise * r.sample::<f64, _>(StandardNormal)
        })
        .collect()
}

/// A random model of kind `seed % 3` and a random dataset it was not fitted on.
fn random_pair(seed: u64) -> (RegressionModel, Dataset) {
    let mut r = common::rng(seed ^ 0xACCE);
    let n = r.random_range(5..400);
    let f = r.random_range(1..8);
    let rows = random_features(&mut r, n, f);
    let y = random_targets(&mut r, &rows);
    let data = Dataset::from_rows(&rows, y).unwrap();
    let stats = Standardizer::fit(&data).ok();
    let spread = data.targets().iter().map(|v| v.abs()).fold(1.0, f64::max);
    let bias = r.random_range(-spread..spread);
    let predictor = match seed % 3 {
        0 => Predictor::Linear(LinearModel::new(
            (0..f).map(|_| r.sample(StandardNormal)).collect(),
            bias,
        )),
        1 => {
            let mut m = init_mlp(f, r.random()).unwrap();
            for b in m.params.b1.iter_mut().chain(m.params.b2.iter_mut()) {
                *b = r.random_range(-0.5f32..0.5);
            }
            m.bias = bias;
            Predictor::Mlp(m)
        }
        _ => Predictor::Mean(MeanModel {
            mean: bias,
            n_features: f,
        }),
    };
    let stats = if seed % 3 == 2 { None } else { stats };
    (RegressionModel::new(predictor, stats).unwrap(), data)
}

fn criteria_1_and_2() -> Vec<Line> {
    let mut worst_residual = 0.0f64;
    let mut worst_drop = 0.0f64;
    let mut kinds = [0usize; 3];
    for seed in 0..100 {
        let (model, data) = random_pair(seed);
        kinds[seed as usize % 3] += 1;
        let before = model.predict_dataset(&data).unwrap();
        let (fixed, correction) = calibrate_on(&model, &data, "train+val").unwrap();
        let after = fixed.predict_dataset(&data).unwrap();
        let y = data.targets();

        let residual = exact_residual_sum(&after, y).abs().to_f64().unwrap();
        worst_residual = worst_residual.max(residual / abs_sum(y));

        let drop = (exact_mse(&before, y) - exact_mse(&after, y)).to_f64().unwrap();
        let d2 = correction.delta_b * correction.delta_b;
        worst_drop = worst_drop.max((drop - d2).abs() / d2);
    }
    vec![
        check(
            "1",
            "residual sum vanishes on the calibration set",
            worst_residual <= 1e-8,
            format!(
                "worst |Σr|/Σ|y| = {worst_residual:.3e} (limit 1e-8) over 100 pairs: {} linear, {} mlp, {} mean",
                kinds[0], kinds[1], kinds[2]
            ),
        ),
        check(
            "2",
            "MSE drops by exactly delta_b²",
            worst_drop <= 1e-10,
            format!("worst |drop − δ_b²|/δ_b² = {worst_drop:.3e} (limit 1e-10) over the same 100 pairs"),
        ),
    ]
}

fn criterion_3() -> Line {
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    let mut r = common::rng(3);
    for &c in &[0.5, -0.375, 2.25, -17.0, 0.0078125] {
        for &n in &[60usize, 1000, 15000] {
            // Dyadic targets make `y − c` and every prefix sum exact.
            let y: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(8u32..8000)) / 8.0).collect();
            let pred: Vec<f64> = y.iter().map(|t| t - c).collect();
            let grid = default_grid(n);
            let (deltas, _) = trial_curve(&pred, &y, &grid, 11).unwrap();
            for (g, d) in grid.iter().zip(&deltas) {
                checked += 1;
                if *d != *g as f64 * c.abs() {
                    mismatches += 1;
                }
            }
            let whole = total_error(&pred, &y).unwrap();
            checked += 1;
            if whole != n as f64 * c.abs() {
                mismatches += 1;
            }
        }
    }
    check(
        "3",
        "total error of an offset perfect predictor is N·|c|",
        mismatches == 0,
        format!("{mismatches} inexact of {checked} prefix evaluations (exact equality required)"),
    )
}

fn criterion_4() -> Line {
    let (mut worst32, mut worst64) = (0.0f64, 0.0f64);
    for seed in 0..50 {
        let (m, batch) = common::random_network_and_batch(1000 + seed, 8);
        for (precision, worst) in [(Precision::F32, &mut worst32), (Precision::F64, &mut worst64)] {
            let bp = common::backprop(&m, &batch, precision);
            let fd = common::finite_difference(&m, &batch, precision);
            *worst = worst.max(common::max_relative_error(&bp, &fd));
        }
    }
    check(
        "4",
        "backprop matches central differences",
        worst32 < 1e-2 && worst64 < 1e-6,
        format!(
            "50 networks, batch 8, step 1e-3: worst relative error f32 {worst32:.2e} (limit 1e-2), f64 {worst64:.2e} (limit 1e-6)"
        ),
    )
}

fn criterion_5() -> Line {
    let mut worst = 0.0f64;
    let mut solved = 0;
    for seed in 0..100 {
        let mut r = common::rng(5000 + seed);
        let f = r.random_range(1..12);
        let n = r.random_range(f + 2..500);
        let rows = random_features(&mut r, n, f);
        let y = random_targets(&mut r, &rows);
        let data = Dataset::from_rows(&rows, y).unwrap();
        let Ok(model) = fit_linear(&data) else { continue };
        solved += 1;
        let pred: Vec<f64> = data.rows().map(|x| model.predict(x)).collect();
        let s = exact_residual_sum(&pred, data.targets()).abs().to_f64().unwrap();
        worst = worst.max(s / abs_sum(data.targets()));
    }
    check(
        "5",
        "least squares leaves zero residual sum",
        solved == 100 && worst <= 1e-8,
        format!("{solved}/100 problems solved; worst |Σr|/Σ|y| = {worst:.3e} (limit 1e-8)"),
    )
}

fn small_synthetic_config(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        data: DataSource::Synthetic {
            spec: SynthSpec {
                n_points: 1500,
                n_features: 5,
                generator: GeneratorKind::SigmoidMixture,
                noise_sigma: 0.3,
                target_offset: 10.0,
                seed: 8,
            },
        },
        split: SplitSpec::Counts([700, 300, 500]),
        models: vec![ModelKind::Linear, ModelKind::Mlp, ModelKind::Mean],
        train: TrainConfig {
            epochs: 30,
            ..TrainConfig::default()
        },
        calibration_source: CalibrationSource::TrainVal,
        n_trials: 4,
        base_seed: 21,
        curve_grid: None,
        output_dir: out.to_path_buf(),
    }
}

fn criterion_6() -> Line {
    let dir = tempfile::tempdir().unwrap();
    let a = small_synthetic_config(&dir.path().join("a"));
    let b = small_synthetic_config(&dir.path().join("b"));
    let ra = run_experiment(
        &a,
        &RunOptions {
            jobs: Some(1),
            round_like_paper: false,
        },
    );
    let rb = run_experiment(
        &b,
        &RunOptions {
            jobs: Some(4),
            round_like_paper: false,
        },
    );
    if let Err(e) = ra.and(rb) {
        return check(
            "6",
            "identical configs give identical tables",
            false,
            format!("run failed: {e}"),
        );
    }
    let read = |p: PathBuf| std::fs::read(p).unwrap();
    let same_table = read(dir.path().join("a/table.csv")) == read(dir.path().join("b/table.csv"));
    let same_curves = read(dir.path().join("a/curves.csv")) == read(dir.path().join("b/curves.csv"));
    check(
        "6",
        "identical configs give identical tables",
        same_table && same_curves,
        format!("table.csv identical: {same_table}; curves.csv identical: {same_curves} (1 vs 4 worker threads)"),
    )
}

fn data_dir() -> PathBuf {
    std::env::var_os("BIASCAL_GAS_TURBINE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/gas-turbine"))
}

fn has_csv(dir: &Path) -> bool {
    std::fs::read_dir(dir)
        .map(|entries| {
            entries
                .filter_map(|e| e.ok())
                .any(|e| e.path().extension().is_some_and(|x| x == "csv"))
        })
        .unwrap_or(false)
}

/// Criteria 8 to 11 evaluated on a finished run; `r2_band` bounds the
/// uncorrected network's mean test R² when given.
fn network_criteria(run: &ExperimentRun, data: &Dataset, r2_band: Option<(f64, f64)>) -> Vec<Line> {
    let table = &run.table;
    let (mlp, fixed) = (table.row("mlp").unwrap(), table.row("mlp+corrected").unwrap());
    let rel = |r: &biascal::metrics::AggregateReport| r.rel_test.map_or(f64::NAN, |m| m.mean);
    let (rel_mlp, rel_fixed) = (rel(mlp), rel(fixed));

    let r2_ok = r2_band.is_none_or(|(lo, hi)| (lo..=hi).contains(&mlp.r2_test.mean));
    let band = r2_band.map_or(String::new(), |(lo, hi)| format!(" (band [{lo}, {hi}])"));
    let c8 = check(
        "8",
        "uncorrected network: accuracy and relative total error",
        r2_ok && rel_mlp >= 3.0 * rel_fixed,
        format!(
            "test R² {:.4}{band}; δ_test {rel_mlp:.3}% vs corrected {rel_fixed:.3}% (ratio {:.2}, limit ≥ 3)",
            mlp.r2_test.mean,
            rel_mlp / rel_fixed
        ),
    );

    let mlp_index = run
        .manifest
        .config
        .models
        .iter()
        .position(|k| *k == ModelKind::Mlp)
        .unwrap();
    let records: Vec<_> = run.manifest.trials.iter().map(|t| &t.models[mlp_index]).collect();
    // Per trial: |Σr| on the calibration set relative to that set's Σ|y|.
    let worst_calib = run
        .manifest
        .trials
        .iter()
        .zip(&records)
        .map(|(t, m)| {
            let idx = run.manifest.config.calibration_source.indices(&t.split);
            let scale: f64 = idx.iter().map(|&i| data.targets()[i].abs()).sum();
            m.calibration.residual_sum.abs() / scale
        })
        .fold(0.0, f64::max);
    let c9 = check(
        "9",
        "corrected network: total error",
        worst_calib <= 1e-8 && rel_fixed <= 1.0 && fixed.delta_test.mean <= mlp.delta_test.mean,
        format!(
            "worst calibration |Σr|/Σ|y| {worst_calib:.3e} (limit 1e-8); δ_test {rel_fixed:.3}% (limit 1%); Δ_test {:.2} vs uncorrected {:.2}",
            fixed.delta_test.mean,
            mlp.delta_test.mean
        ),
    );

    let worst_r2 = records
        .iter()
        .map(|m| (m.corrected.test.r2 - m.uncorrected.test.r2).abs())
        .fold(0.0, f64::max);
    let c10 = check(
        "10",
        "correction leaves test R² unchanged",
        worst_r2 <= 0.01,
        format!("worst per-trial |ΔR²_test| = {worst_r2:.2e} (limit 0.01)"),
    );

    let grows = records
        .iter()
        .filter(|m| m.curve_uncorrected.last() > m.curve_uncorrected.first())
        .count();
    let slope = |label: &str| {
        run.curves
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, c)| c.delta_slope())
            .unwrap()
    };
    let (s_mlp, s_fixed) = (slope("mlp"), slope("mlp+corrected"));
    let needed = (9 * records.len()).div_ceil(10);
    let c11 = check(
        "11",
        "uncorrected total error grows with test size",
        grows >= needed && s_mlp > 0.0 && s_fixed.abs() <= s_mlp / 3.0,
        format!(
            "Δ grows in {grows}/{} trials (need {needed}); slope uncorrected {s_mlp:.4e}, corrected {s_fixed:.4e} (limit |·| ≤ {:.4e})",
            records.len(),
            s_mlp / 3.0
        ),
    );
    vec![c8, c9, c10, c11]
}

fn gas_turbine() -> Vec<Line> {
    let dir = data_dir();
    let blocked = |id, name| Line {
        id,
        name,
        status: Status::Blocked,
        detail: format!(
            "gas-turbine CSV files not found in {}; set BIASCAL_GAS_TURBINE_DIR",
            dir.display()
        ),
    };
    if !has_csv(&dir) {
        return vec![
            blocked("7", "linear baseline"),
            blocked("8", "uncorrected network: accuracy and relative total error"),
            blocked("9", "corrected network: total error"),
            blocked("10", "correction leaves test R² unchanged"),
            blocked("11", "uncorrected total error grows with test size"),
        ];
    }
    let config_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/gas_turbine.json");
    let mut config = ExperimentConfig::load(&config_path).unwrap();
    if let DataSource::Csv { paths, .. } = &mut config.data {
        *paths = vec![dir.clone()];
    }
    let data = match config.data.load() {
        Ok(d) => d,
        Err(e) => {
            return vec![check(
                "7",
                "linear baseline",
                false,
                format!("loading {}: {e}", dir.display()),
            )];
        }
    };
    let out = tempfile::tempdir().unwrap();
    config.output_dir = out.path().to_path_buf();
    let run = match execute(&config, &data, None) {
        Ok(r) => r,
        Err(e) => return vec![check("7", "linear baseline", false, format!("experiment failed: {e}"))],
    };
    let lin = run.table.row("linear").unwrap();
    let lin_index = config.models.iter().position(|k| *k == ModelKind::Linear).unwrap();
    let dev_abs = run
        .manifest
        .trials
        .iter()
        .map(|t| {
            t.split
                .development()
                .iter()
                .map(|&i| data.targets()[i].abs())
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    let lin_delta = run
        .manifest
        .trials
        .iter()
        .map(|t| t.models[lin_index].uncorrected.train.delta_abs)
        .sum::<f64>()
        / run.manifest.trials.len() as f64;
    let mut lines = vec![check(
        "7",
        "linear baseline",
        (0.53..=0.59).contains(&lin.r2_train.mean)
            && (0.54..=0.60).contains(&lin.r2_test.mean)
            && lin_delta <= 1e-6 * dev_abs,
        format!(
            "R² train {:.4} (band [0.53, 0.59]), test {:.4} (band [0.54, 0.60]); Δ_D {lin_delta:.3e} (limit {:.3e})",
            lin.r2_train.mean,
            lin.r2_test.mean,
            1e-6 * dev_abs
        ),
    )];
    lines.extend(network_criteria(&run, &data, Some((0.66, 0.78))));
    lines
}

/// The network criteria on a synthetic task of the gas-turbine shape.
/// Informational only; it does not stand in for the real data.
fn synthetic_analogue() -> Vec<String> {
    let spec = SynthSpec {
        n_points: 36_733,
        n_features: 10,
        generator: GeneratorKind::SigmoidMixture,
        noise_sigma: 0.5,
        target_offset: 3.0,
        seed: 42,
    };
    let config = ExperimentConfig {
        data: DataSource::Synthetic { spec: spec.clone() },
        split: SplitSpec::gas_turbine(),
        models: vec![ModelKind::Linear, ModelKind::Mlp],
        train: TrainConfig {
            epochs: 100,
            ..TrainConfig::default()
        },
        calibration_source: CalibrationSource::TrainVal,
        n_trials: 10,
        base_seed: 0,
        curve_grid: None,
        output_dir: PathBuf::new(),
    };
    let data = generate_synthetic(&spec).unwrap().data;
    match execute(&config, &data, None) {
        Ok(run) => network_criteria(&run, &data, None)
            .into_iter()
            .map(|l| {
                let tag = match l.status {
                    Status::Pass => "holds",
                    _ => "does not hold",
                };
                format!("[INFO] synthetic analogue of {}: {tag}: {}", l.id, l.detail)
            })
            .collect(),
        Err(e) => vec![format!("[INFO] synthetic analogue failed: {e}")],
    }
}

fn main() -> ExitCode {
    // `cargo test -- --list` and friends probe test binaries; nothing to list.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut lines = criteria_1_and_2();
    lines.push(criterion_3());
    lines.push(criterion_4());
    lines.push(criterion_5());
    lines.push(criterion_6());
    lines.extend(gas_turbine());

    let mut failed = 0;
    println!("acceptance criteria");
    for l in &lines {
        let tag = match l.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Blocked => "BLOCKED",
        };
        println!("[{tag}] {:>2} {}: {}", l.id, l.name, l.detail);
    }
    if lines.iter().any(|l| matches!(l.status, Status::Blocked)) {
        for info in synthetic_analogue() {
            println!("{info}");
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
