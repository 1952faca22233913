//! Experiment orchestration: declarative configs, built-in desk/paper
//! profiles, and the `generate | train | evaluate | analyze` pipeline used by
//! the `phlienet` binary.

pub mod profiles;

pub use profiles::Profile;

use crate::error::{Error, Result};
use crate::lie::LieSpec;
use crate::metrics;
use crate::rollout::{self, Variant};
use crate::sysgen::{
    build_dataset, load_dataset, save_dataset, Split, SplitProtocol, SystemName, SystemSpec,
    TrajectoryDataset,
};
use crate::targets::{TargetKind, TargetSpec};
use crate::trainer::{
    load_checkpoint, save_checkpoint, train_multiseed, write_training_log, ModelCheckpoint,
    ModelSpec, TrainConfig,
};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Generation protocols for the four dataset splits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitsConfig {
    pub train: SplitProtocol,
    pub val: SplitProtocol,
    pub test_interp: Option<SplitProtocol>,
    pub test_extrap: Option<SplitProtocol>,
}

impl SplitsConfig {
    pub fn protocol(&self, split: Split) -> Option<&SplitProtocol> {
        match split {
            Split::Train => Some(&self.train),
            Split::Val => Some(&self.val),
            Split::TestInterp => self.test_interp.as_ref(),
            Split::TestExtrap => self.test_extrap.as_ref(),
        }
    }
}

fn default_channels() -> usize {
    22
}
fn default_kernel() -> usize {
    5
}
fn default_hidden() -> usize {
    48
}
fn default_hidden_layers() -> Vec<usize> {
    vec![40, 40]
}
fn default_hypernet_hidden() -> Vec<usize> {
    vec![64, 64]
}

/// One model entry of an experiment; architecture dimensions that depend on
/// the system (input/output width, ISL) are filled in from the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    pub variant: Variant,
    pub kind: TargetKind,
    #[serde(default = "default_channels")]
    pub channels: usize,
    #[serde(default = "default_kernel")]
    pub kernel: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_hidden_layers")]
    pub hidden_layers: Vec<usize>,
    #[serde(default)]
    pub lie: Option<LieSpec>,
    #[serde(default = "default_hypernet_hidden")]
    pub hypernet_hidden: Vec<usize>,
}

impl ModelConfig {
    pub fn phlienet(name: &str, lie: LieSpec) -> Self {
        ModelConfig {
            name: name.into(),
            variant: Variant::Phlienet,
            kind: TargetKind::TcnnCd,
            channels: default_channels(),
            kernel: default_kernel(),
            hidden: default_hidden(),
            hidden_layers: default_hidden_layers(),
            lie: Some(lie),
            hypernet_hidden: default_hypernet_hidden(),
        }
    }

    pub fn baseline(name: &str, variant: Variant, kind: TargetKind) -> Self {
        ModelConfig {
            name: name.into(),
            variant,
            kind,
            channels: default_channels(),
            kernel: default_kernel(),
            hidden: default_hidden(),
            hidden_layers: default_hidden_layers(),
            lie: None,
            hypernet_hidden: default_hypernet_hidden(),
        }
    }
}

/// A full experiment: system, split protocols, models, and training knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemName,
    pub out_dir: String,
    pub seed: u64,
    pub theta_rel: f64,
    pub isl: usize,
    pub splits: SplitsConfig,
    pub models: Vec<ModelConfig>,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.theta_rel <= 0.0 {
            return Err(Error::Config("theta_rel must be positive".into()));
        }
        if self.isl < 1 {
            return Err(Error::Config("isl must be at least 1".into()));
        }
        let mut seen = Vec::new();
        for m in &self.models {
            if seen.contains(&&m.name) {
                return Err(Error::Config(format!("duplicate model name {}", m.name)));
            }
            seen.push(&m.name);
            self.model_spec(m)?.validate()?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Json { path: path.display().to_string(), source: e })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Json { path: path.display().to_string(), source: e })?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn model(&self, name: &str) -> Result<&ModelConfig> {
        self.models.iter().find(|m| m.name == name).ok_or_else(|| {
            let known: Vec<&str> = self.models.iter().map(|m| m.name.as_str()).collect();
            Error::Config(format!("unknown model {name}; configured models: {known:?}"))
        })
    }

    /// Fills system-derived dimensions into a full model spec.
    pub fn model_spec(&self, m: &ModelConfig) -> Result<ModelSpec> {
        let sys = SystemSpec::standard(self.system);
        let d = sys.state_dim;
        let input_dim = match m.variant {
            Variant::Augmented => d + sys.param_dim,
            _ => d,
        };
        let target = match m.kind {
            TargetKind::TcnnCd => TargetSpec::tcnn_cd(input_dim, d, self.isl, m.channels, m.kernel),
            TargetKind::Lstm => TargetSpec::lstm(input_dim, d, self.isl, m.hidden),
            TargetKind::Ffnn => TargetSpec::ffnn(input_dim, d, self.isl, m.hidden_layers.clone()),
        };
        let spec = ModelSpec {
            name: m.name.clone(),
            variant: m.variant,
            target,
            lie: m.lie.clone(),
            hypernet_hidden: m.hypernet_hidden.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dataset_dir(&self, split: Split) -> PathBuf {
        Path::new(&self.out_dir).join("datasets").join(split.as_str())
    }

    pub fn model_dir(&self, name: &str) -> PathBuf {
        Path::new(&self.out_dir).join("models").join(name)
    }

    pub fn eval_dir(&self, split: Split) -> PathBuf {
        Path::new(&self.out_dir).join("eval").join(split.as_str())
    }

    pub fn analysis_dir(&self, name: &str) -> PathBuf {
        Path::new(&self.out_dir).join("analysis").join(name)
    }

}

/// Generates every defined split. Existing dataset directories are kept
/// unless `force`; the training scaler is fitted first and copied into the
/// other splits.
pub fn cmd_generate(cfg: &ExperimentConfig, force: bool) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let sys = SystemSpec::standard(cfg.system);
    let mut written = Vec::new();

    let train_dir = cfg.dataset_dir(Split::Train);
    let train_ds = if train_dir.join("manifest.json").exists() && !force {
        load_dataset(&train_dir)?
    } else {
        let ds = build_dataset(
            &sys,
            Split::Train,
            &cfg.splits.train,
            cfg.seed,
            cfg.train.noise_level,
            None,
        )?;
        save_dataset(&ds, &train_dir)?;
        written.push(train_dir.clone());
        ds
    };

    for split in [Split::Val, Split::TestInterp, Split::TestExtrap] {
        let Some(protocol) = cfg.splits.protocol(split) else { continue };
        let dir = cfg.dataset_dir(split);
        if dir.join("manifest.json").exists() && !force {
            continue;
        }
        let ds = build_dataset(
            &sys,
            split,
            protocol,
            cfg.seed,
            cfg.train.noise_level,
            Some(&train_ds.scaler),
        )?;
        save_dataset(&ds, &dir)?;
        written.push(dir);
    }
    Ok(written)
}

fn load_split(cfg: &ExperimentConfig, split: Split) -> Result<TrajectoryDataset> {
    let dir = cfg.dataset_dir(split);
    if !dir.join("manifest.json").exists() {
        return Err(Error::MissingArtifact(format!(
            "dataset for split '{}' not found at {}; run `phlienet generate` first",
            split.as_str(),
            dir.display()
        )));
    }
    load_dataset(&dir)
}

/// Trains one configured model across all seeds; writes one checkpoint per
/// seed under seeds/<i>, the winning checkpoint under best/, and a combined
/// training_log.csv. With `resume`, existing per-seed checkpoints are
/// reloaded and the best is re-selected without retraining.
pub fn cmd_train(cfg: &ExperimentConfig, model_name: &str, resume: bool) -> Result<PathBuf> {
    cfg.validate()?;
    let spec = cfg.model_spec(cfg.model(model_name)?)?;
    let dir = cfg.model_dir(model_name);

    let (best_idx, checkpoints) = if resume && dir.join("seeds").exists() {
        let mut ckpts = Vec::new();
        for i in 0..cfg.train.seeds {
            let sd = dir.join("seeds").join(i.to_string());
            if sd.join("model.json").exists() {
                ckpts.push(load_checkpoint(&sd)?);
            }
        }
        if ckpts.is_empty() {
            return Err(Error::Training(format!("no existing seeds to resume in {}", dir.display())));
        }
        let mut best = None;
        for (i, c) in ckpts.iter().enumerate() {
            if c.failed {
                continue;
            }
            if best.map_or(true, |b: usize| c.best_val < ckpts[b].best_val) {
                best = Some(i);
            }
        }
        let best = best.ok_or_else(|| Error::Training("all existing seeds failed".into()))?;
        (best, ckpts)
    } else {
        let train_ds = load_split(cfg, Split::Train)?;
        let val_ds = load_split(cfg, Split::Val)?;
        train_multiseed(&spec, &train_ds, &val_ds, &cfg.train, cfg.seed)?
    };

    for (i, ckpt) in checkpoints.iter().enumerate() {
        save_checkpoint(ckpt, &dir.join("seeds").join(i.to_string()))?;
    }
    save_checkpoint(&checkpoints[best_idx], &dir.join("best"))?;
    write_training_log(&checkpoints, &dir.join("training_log.csv"))?;
    Ok(dir)
}

fn load_best(cfg: &ExperimentConfig, model_name: &str) -> Result<ModelCheckpoint> {
    let dir = cfg.model_dir(model_name).join("best");
    if !dir.join("model.json").exists() {
        return Err(Error::MissingArtifact(format!(
            "no checkpoint for model '{model_name}' at {}; run `phlienet train --model {model_name}` first",
            dir.display()
        )));
    }
    load_checkpoint(&dir)
}

#[derive(Serialize)]
struct RunIndexEntry {
    param_index: usize,
    ic_index: usize,
    p_raw: f64,
    file: String,
    diverged_at: Option<usize>,
}

/// Forecasts + metrics for each named model on one split. Writes per-model
/// metrics.json / nrmse_curves.csv / spectra.csv / per-run CSVs with a JSON
/// index, and a cross-model comparison.csv.
pub fn cmd_evaluate(
    cfg: &ExperimentConfig,
    model_names: &[String],
    split: Split,
    theta_override: Option<f64>,
) -> Result<PathBuf> {
    cfg.validate()?;
    let theta = theta_override.unwrap_or(cfg.theta_rel);
    let ds = load_split(cfg, split)?;
    let eval_dir = cfg.eval_dir(split);
    let mut comparison = String::from("model,ttt_mean,ttt_std,ttt_legend,spectrum_error,diverged_runs\n");

    for name in model_names {
        let ckpt = load_best(cfg, name)?;
        let state = &ckpt.model;
        if state.spec.target.output_dim != ds.state_dim() {
            return Err(Error::Evaluation(format!(
                "checkpoint {name} predicts dimension {}, dataset has {}",
                state.spec.target.output_dim,
                ds.state_dim()
            )));
        }
        if state.scaler != ds.scaler {
            return Err(Error::Evaluation(format!(
                "checkpoint {name} was trained with a different scaler than this dataset"
            )));
        }
        let runs = rollout::batch_forecast(name, state.spec.variant, |p| state.bind(p), &ds)?;
        let report = metrics::compute_report(&runs, &ds.params, theta);

        let model_dir = eval_dir.join(name);
        report.write(&model_dir, &runs)?;
        let runs_dir = model_dir.join("runs");
        std::fs::create_dir_all(&runs_dir).map_err(|e| Error::io(&runs_dir, e))?;
        let mut index = Vec::new();
        for run in &runs {
            let file = format!("run_p{}_ic{}.csv", run.param_index, run.ic_index);
            rollout::write_run_csv(run, &runs_dir.join(&file))?;
            index.push(RunIndexEntry {
                param_index: run.param_index,
                ic_index: run.ic_index,
                p_raw: run.p_raw,
                file,
                diverged_at: run.diverged_at,
            });
        }
        let ipath = model_dir.join("runs_index.json");
        let json = serde_json::to_string_pretty(&index)
            .map_err(|e| Error::Json { path: ipath.display().to_string(), source: e })?;
        std::fs::write(&ipath, json).map_err(|e| Error::io(&ipath, e))?;

        comparison.push_str(&format!(
            "{name},{},{},{},{},{}\n",
            report.ttt.mean,
            report.ttt.std,
            report.ttt.legend,
            report.spectrum_aggregate.map_or("NA".to_string(), |v| v.to_string()),
            report.diverged_runs,
        ));
    }
    let cpath = eval_dir.join("comparison.csv");
    std::fs::create_dir_all(&eval_dir).map_err(|e| Error::io(&eval_dir, e))?;
    std::fs::write(&cpath, comparison).map_err(|e| Error::io(&cpath, e))?;
    Ok(eval_dir)
}

/// Embedding-space diagnostics for one trained weight-generating model.
pub fn cmd_analyze(cfg: &ExperimentConfig, model_name: &str, probes: usize) -> Result<PathBuf> {
    cfg.validate()?;
    let ckpt = load_best(cfg, model_name)?;
    let sys = SystemSpec::standard(cfg.system);
    let grid = crate::analysis::default_probe_grid(sys.varied_param_range, probes.max(1));
    let report = crate::analysis::embedding_report(&ckpt.model, &grid)?;
    let dir = cfg.analysis_dir(model_name);
    report.write(&dir)?;
    Ok(dir)
}

#[derive(Parser, Debug)]
#[command(
    name = "phlienet",
    version,
    about = "Parametric hypernetwork forecasting on ODE benchmarks: dataset generation, training, evaluation, and embedding analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Experiment config file (JSON). Mutually exclusive with --system.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Benchmark system for a built-in profile
    /// (vanderpol|roessler|finance|lorenz3d|chua|duffing).
    #[arg(long)]
    system: Option<String>,
    /// Built-in profile scale (desk|paper).
    #[arg(long, default_value = "desk")]
    profile: String,
    /// Output directory (defaults to runs/<system>-<profile>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Global seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the configured dataset splits.
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        /// Regenerate datasets even if they already exist.
        #[arg(long)]
        force: bool,
    },
    /// Train one configured model across seeds and keep the best checkpoint.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Model name from the config.
        #[arg(long)]
        model: String,
        /// Re-select the best seed from existing checkpoints without retraining.
        #[arg(long)]
        resume: bool,
    },
    /// Forecast and score trained models on a split.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Model name(s); defaults to every configured model.
        #[arg(long = "model")]
        models: Vec<String>,
        /// Dataset split (train|val|test-interp|test-extrap).
        #[arg(long, default_value = "test-interp")]
        split: String,
        /// Time-to-threshold level override.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Emit embedding-space diagnostics for a trained model.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Model name from the config.
        #[arg(long)]
        model: String,
        /// Probe grid resolution.
        #[arg(long, default_value_t = 200)]
        probes: usize,
    },
}

fn resolve_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&common.config, &common.system) {
        (Some(path), None) => ExperimentConfig::from_file(path)?,
        (None, Some(system)) => {
            let system = SystemName::parse(system)?;
            let profile = Profile::parse(&common.profile)?;
            let out = common
                .out
                .clone()
                .unwrap_or_else(|| {
                    PathBuf::from(format!("runs/{}-{}", system.as_str(), common.profile))
                });
            profiles::config(system, profile, &out.to_string_lossy(), common.seed.unwrap_or(7))
        }
        (Some(_), Some(_)) => {
            return Err(Error::Config("--config and --system are mutually exclusive".into()))
        }
        (None, None) => {
            return Err(Error::Config("one of --config or --system is required".into()))
        }
    };
    if let Some(out) = &common.out {
        cfg.out_dir = out.to_string_lossy().to_string();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Executes a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common, force } => {
            let cfg = resolve_config(&common)?;
            let written = cmd_generate(&cfg, force)?;
            if written.is_empty() {
                println!("datasets already present under {} (use --force to regenerate)", cfg.out_dir);
            }
            for dir in written {
                println!("wrote {}", dir.display());
            }
        }
        Command::Train { common, model, resume } => {
            let cfg = resolve_config(&common)?;
            let dir = cmd_train(&cfg, &model, resume)?;
            let best = load_best(&cfg, &model)?;
            println!(
                "trained {model}: best seed {} (val loss {:.6e}) -> {}",
                best.seed_index,
                best.best_val,
                dir.display()
            );
        }
        Command::Evaluate { common, models, split, threshold } => {
            let cfg = resolve_config(&common)?;
            let split = Split::parse(&split)?;
            let names: Vec<String> = if models.is_empty() {
                cfg.models.iter().map(|m| m.name.clone()).collect()
            } else {
                models
            };
            let dir = cmd_evaluate(&cfg, &names, split, threshold)?;
            println!("evaluation written to {}", dir.display());
        }
        Command::Analyze { common, model, probes } => {
            let cfg = resolve_config(&common)?;
            let dir = cmd_analyze(&cfg, &model, probes)?;
            println!("analysis written to {}", dir.display());
        }
    }
    Ok(())
}

/// Binary entry point: parse, run, map errors to exit codes
/// (0 ok, 2 usage, 3 data, 4 training, 5 evaluation).
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
