use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use biascal::calibration::calibrate_on;
use biascal::data::{generate_synthetic, write_cache, SynthSpec};
use biascal::experiment::{fit_model, run_experiment, DataSource, ExperimentConfig, RunOptions};
use biascal::metrics::{accumulation_curve, EvalReport};
use biascal::{Dataset, ModelKind, RegressionModel, SplitIndices};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "biascal", version, about = "Output-bias correction for regression models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the configuration's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log more (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of an experiment and write tables, curves, models and a manifest.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Maximum number of trials running at once (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory, replacing the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Round table.csv like the published table.
        #[arg(long)]
        round_like_paper: bool,
    },
    /// Fit one model on one trial's split and save it.
    Fit {
        #[command(flatten)]
        trial: TrialArgs,
        #[arg(long)]
        model: ModelKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shift a saved model's bias by its mean residual on the calibration set.
    Calibrate {
        #[command(flatten)]
        trial: TrialArgs,
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the metrics of a saved model on one part of a trial's split.
    Evaluate {
        #[command(flatten)]
        trial: TrialArgs,
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long, value_enum, default_value_t = Part::Test)]
        set: Part,
    },
    /// Write the total-error accumulation curve of a saved model on the test set.
    Curve {
        #[command(flatten)]
        trial: TrialArgs,
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset as CSV with an integrity sidecar.
    Synth {
        /// Experiment configuration with synthetic data, or a bare synthetic spec.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct TrialArgs {
    #[arg(long)]
    config: PathBuf,
    /// Trial index; its seed is base_seed + trial.
    #[arg(long, default_value_t = 0)]
    trial: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Part {
    Train,
    Val,
    /// Training and validation data together.
    Dev,
    Test,
    /// The configured calibration set.
    Calibration,
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config =
        ExperimentConfig::load(path).with_context(|| format!("reading configuration {}", path.display()))?;
    if let Some(s) = seed {
        config.base_seed = s;
    }
    config.validate()?;
    Ok(config)
}

struct Trial {
    config: ExperimentConfig,
    data: Dataset,
    split: SplitIndices,
}

impl Trial {
    fn load(args: &TrialArgs, seed: Option<u64>) -> Result<Self> {
        let config = load_config(&args.config, seed)?;
        if args.trial >= config.n_trials {
            bail!("trial {} out of range for {} trials", args.trial, config.n_trials);
        }
        let data = config.data.load()?;
        let split = config.trial_split(&data, args.trial)?;
        Ok(Self { config, data, split })
    }

    fn part(&self, part: Part) -> Result<Dataset> {
        let indices = match part {
            Part::Train => self.split.train.clone(),
            Part::Val => self.split.val.clone(),
            Part::Dev => self.split.development(),
            Part::Test => self.split.test.clone(),
            Part::Calibration => self.config.calibration_source.indices(&self.split),
        };
        Ok(self.data.select(&indices)?)
    }
}

fn read_model(path: &Path) -> Result<RegressionModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading model {}", path.display()))?;
    Ok(RegressionModel::from_json(&text)?)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Experiment {
            config,
            jobs,
            out,
            round_like_paper,
        } => {
            let mut config = load_config(&config, cli.seed)?;
            if let Some(out) = out {
                config.output_dir = out;
            }
            if jobs == Some(0) {
                bail!("--jobs must be at least 1");
            }
            let run = run_experiment(&config, &RunOptions { jobs, round_like_paper })?;
            print!("{}", run.table.to_csv(round_like_paper));
            log::info!("outputs written to {}", config.output_dir.display());
        }
        Command::Fit { trial, model, out } => {
            let t = Trial::load(&trial, cli.seed)?;
            let seed = t.config.trial_seed(trial.trial);
            let fitted = fit_model(model, &t.data, &t.split, &t.config.train, seed)?;
            if let Some(epoch) = fitted.best_epoch {
                log::info!("selected epoch {epoch}");
            }
            write(&out, &fitted.model.to_json()?)?;
        }
        Command::Calibrate { trial, model_file, out } => {
            let t = Trial::load(&trial, cli.seed)?;
            let model = read_model(&model_file)?;
            let calib = t.part(Part::Calibration)?;
            let (corrected, correction) = calibrate_on(&model, &calib, t.config.calibration_source.tag())?;
            write(&out, &corrected.to_json()?)?;
            println!("{}", serde_json::to_string_pretty(&correction)?);
        }
        Command::Evaluate { trial, model_file, set } => {
            let t = Trial::load(&trial, cli.seed)?;
            let model = read_model(&model_file)?;
            let data = t.part(set)?;
            let report = EvalReport::evaluate(&model.predict_dataset(&data)?, data.targets())?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Curve { trial, model_file, out } => {
            let t = Trial::load(&trial, cli.seed)?;
            let model = read_model(&model_file)?;
            let test = t.part(Part::Test)?;
            let grid = t.config.curve_grid_for(test.len());
            let curve = accumulation_curve(
                &[model.predict_dataset(&test)?],
                &[test.targets().to_vec()],
                &grid,
                t.config.base_seed,
            )?;
            match out {
                Some(path) => write(&path, &curve.to_csv())?,
                None => print!("{}", curve.to_csv()),
            }
        }
        Command::Synth { config, out } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut spec = match ExperimentConfig::from_json(&text) {
                Ok(ExperimentConfig {
                    data: DataSource::Synthetic { spec },
                    ..
                }) => spec,
                Ok(_) => bail!("configuration {} does not describe synthetic data", config.display()),
                Err(_) => serde_json::from_str::<SynthSpec>(&text)
                    .with_context(|| format!("{} is neither a configuration nor a synthetic spec", config.display()))?,
            };
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let task = generate_synthetic(&spec)?;
            let sidecar = write_cache(&task.data, &out)?;
            log::info!("wrote {} rows, sha256 {}", sidecar.rows, sidecar.sha256);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
