//! Command-line entry point.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 on
//! data errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::dataset::FeatureDataset;
use crate::error::{Error, Result};
use crate::eval::{mad_per_layer, noise_robustness};
use crate::io::config::RunConfig;
use crate::io::output::{
    config_echo, manifest_text, metrics_json, parse_predictions, parse_pseudolabels,
    predictions_csv, pseudolabels_csv, read_text, write_text, CHECKPOINT_FILE, MANIFEST_FILE,
    METRICS_FILE, PSEUDOLABEL_FILE,
};
use crate::io::{read_dataset, synth, write_dataset, SyntheticSpec};
use crate::nn::Checkpoint;
use crate::pipeline::{loss_trace, report_from_predictions, Pipeline};

#[derive(Debug, Parser)]
#[command(
    name = "subgraph-ssl",
    version,
    about = "Semi-supervised classification over signed k-NN subgraphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a Gaussian-mixture dataset.
    Synth(SynthArgs),
    /// Train a model; writes checkpoint, metrics, pseudolabels and manifest.
    Train(TrainArgs),
    /// Classify test rows with a trained run.
    Infer(InferArgs),
    /// Score a predictions file against labeled rows.
    Eval(EvalArgs),
    /// Per-layer mean cosine distance of the trunk activations.
    Mad(MadArgs),
    /// Accuracy drop under Gaussian noise on the test features.
    Robust(RobustArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 100)]
    per_class: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    cluster_std: f64,
    #[arg(long, default_value_t = 3.0)]
    separation: f64,
    #[arg(long, default_value_t = 0.1)]
    label_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; `.bin` selects the binary format.
    #[arg(long)]
    out: PathBuf,
    /// Labeled test rows per class drawn from the same mixture.
    #[arg(long, default_value_t = 0)]
    test_per_class: usize,
    #[arg(long, requires = "test_per_class")]
    test_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Training pool (labeled and unlabeled rows).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Flat key = value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Labeled rows for early stopping and the metrics file.
    #[arg(long)]
    validation: Option<PathBuf>,
    /// Labeled rows scored into the metrics file instead of validation.
    #[arg(long)]
    test: Option<PathBuf>,
    /// `none`, `all`, or a comma list of denoise, completion, shuffle.
    #[arg(long)]
    ssl: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Run directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Run directory written by `train`.
    #[arg(long)]
    run: PathBuf,
    /// Training pool; defaults to the path recorded in the manifest.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Inference seed; defaults to the run seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct InferArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    test: PathBuf,
    /// Predictions CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// Dataset whose labeled rows are matched to predictions by id.
    #[arg(long)]
    truth: PathBuf,
    /// Metrics JSON; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MadArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Subgraphs averaged per layer.
    #[arg(long, default_value_t = 20)]
    subgraphs: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RobustArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    test: PathBuf,
    /// Comma-separated noise standard deviations in standardized units of
    /// the raw features.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1")]
    sigmas: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth_cmd(a),
        Command::Train(a) => train_cmd(a),
        Command::Infer(a) => infer_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Mad(a) => mad_cmd(a),
        Command::Robust(a) => robust_cmd(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) => 1,
                _ => 2,
            }
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn synth_cmd(a: SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        classes: a.classes,
        per_class: a.per_class,
        dim: a.dim,
        cluster_std: a.cluster_std,
        separation: a.separation,
        label_fraction: a.label_fraction,
        seed: a.seed,
    };
    spec.validate()?;
    let (train, test) = synth::generate_split(&spec, a.test_per_class)?;
    write_dataset(&a.out, &train)?;
    if let (Some(test), Some(path)) = (test, a.test_out) {
        write_dataset(&path, &test)?;
    }
    Ok(())
}

fn resolve_train_config(a: &TrainArgs) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(path) => RunConfig::parse(&read_text(path)?)?,
        None => RunConfig::default(),
    };
    let path_str = |p: &PathBuf| p.to_string_lossy().into_owned();
    if let Some(p) = &a.data {
        cfg.data = path_str(p);
    }
    if let Some(p) = &a.validation {
        cfg.validation = path_str(p);
    }
    if let Some(p) = &a.test {
        cfg.test = path_str(p);
    }
    if let Some(p) = &a.out {
        cfg.out = path_str(p);
    }
    if let Some(s) = &a.ssl {
        cfg.set("ssl", s)?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects key=value, got {kv:?}")))?;
        cfg.set(k.trim(), v)?;
    }
    if cfg.data.is_empty() {
        return Err(usage("no training data: pass --data or set `data`"));
    }
    if cfg.out.is_empty() {
        return Err(usage("no run directory: pass --out or set `out`"));
    }
    Ok(cfg)
}

fn optional_dataset(path: &str, class_count: usize) -> Result<Option<FeatureDataset>> {
    if path.is_empty() {
        Ok(None)
    } else {
        read_dataset(Path::new(path), Some(class_count)).map(Some)
    }
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let cfg = resolve_train_config(&a)?;
    let train = read_dataset(Path::new(&cfg.data), None)?;
    let settings = cfg.settings(train.class_count())?;
    let validation = optional_dataset(&cfg.validation, train.class_count())?;
    let test = optional_dataset(&cfg.test, train.class_count())?;

    let out = PathBuf::from(&cfg.out);
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    write_text(&out.join(MANIFEST_FILE), &manifest_text(&cfg))?;

    let (pipeline, report) = Pipeline::fit(&train, validation.as_ref(), &settings)?;
    pipeline.checkpoint().save(&out.join(CHECKPOINT_FILE))?;
    write_text(
        &out.join(PSEUDOLABEL_FILE),
        &pseudolabels_csv(&pipeline.pseudolabels, train.ids()),
    )?;

    // Scored on test, else validation, else the labeled training rows
    // wired in as unseen nodes.
    let scored = match (test, validation) {
        (Some(t), _) | (None, Some(t)) => t,
        (None, None) => train.select(&train.labeled_indices()),
    };
    let mut metrics = pipeline.evaluate(&scored, cfg.seed)?;
    metrics.mad_per_layer = Some(
        mad_per_layer(
            &pipeline.model,
            &pipeline.train_data,
            &pipeline.distances,
            &settings.subgraph,
            20,
        )?
        .to_vec(),
    );
    metrics.loss_trace = loss_trace(&report);
    metrics.config_echo = config_echo(&cfg);
    write_text(&out.join(METRICS_FILE), &metrics_json(&metrics)?)?;

    let mut log = String::new();
    for e in &report.epochs {
        log.push_str(&format!(
            "epoch {} total {:.6} ce {:.6} entropy {:.6} ssl {:.6}",
            e.epoch,
            e.mean_total(),
            e.mean_ce(),
            e.mean_entropy(),
            e.mean_ssl().values().sum::<f64>()
        ));
        if let Some(v) = e.validation_accuracy {
            log.push_str(&format!(" val_acc {v:.4}"));
        }
        log.push('\n');
    }
    log.push_str(&format!(
        "best_epoch {} steps_per_epoch {} accuracy {:.4}\n",
        report.best_epoch, report.steps_per_epoch, metrics.accuracy_overall
    ));
    write_text(&out.join("train.log"), &log)?;
    Ok(())
}

/// Restores the pipeline of a run directory.
fn load_run(a: &RunArgs) -> Result<(Pipeline, RunConfig)> {
    let cfg = RunConfig::parse(&read_text(&a.run.join(MANIFEST_FILE))?)?;
    let data = match &a.data {
        Some(p) => p.clone(),
        None if !cfg.data.is_empty() => PathBuf::from(&cfg.data),
        None => return Err(usage("manifest records no data path; pass --data")),
    };
    let checkpoint = Checkpoint::load(&a.run.join(CHECKPOINT_FILE))?;
    let train = read_dataset(&data, Some(checkpoint.model.config.class_count))?;
    let pseudo = parse_pseudolabels(&read_text(&a.run.join(PSEUDOLABEL_FILE))?)?;
    let settings = cfg.settings(train.class_count())?;
    let pipeline = Pipeline::restore(checkpoint, &train, Some(pseudo), &settings)?;
    Ok((pipeline, cfg))
}

fn infer_cmd(a: InferArgs) -> Result<()> {
    let (pipeline, cfg) = load_run(&a.run)?;
    let test = read_dataset(&a.test, Some(pipeline.model.config.class_count))?;
    let preds = pipeline.predict(test.features(), test.ids(), a.run.seed.unwrap_or(cfg.seed))?;
    write_text(&a.out, &predictions_csv(&preds))
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let preds = parse_predictions(&read_text(&a.predictions)?)?;
    let classes = preds.first().map_or(0, |p| p.probabilities.len());
    let truth = read_dataset(&a.truth, Some(classes.max(2)))?;
    let by_id: std::collections::HashMap<&str, usize> = truth
        .ids()
        .iter()
        .enumerate()
        .filter_map(|(i, id)| truth.label(i).map(|l| (id.as_str(), l)))
        .collect();
    let mut matched = Vec::new();
    let mut truths = Vec::new();
    for p in preds {
        if let Some(&l) = by_id.get(p.id.as_str()) {
            truths.push(l);
            matched.push(p);
        }
    }
    if matched.is_empty() {
        return Err(Error::InvalidDataset(
            "no prediction id has a label in the truth file".into(),
        ));
    }
    let report = report_from_predictions(&matched, &truths, classes)?;
    emit(a.out.as_deref(), &metrics_json(&report)?)
}

fn mad_cmd(a: MadArgs) -> Result<()> {
    let (pipeline, _) = load_run(&a.run)?;
    let mad = mad_per_layer(
        &pipeline.model,
        &pipeline.train_data,
        &pipeline.distances,
        &pipeline.settings.subgraph,
        a.subgraphs,
    )?;
    let text = serde_json::to_string_pretty(&json!({ "mad_per_layer": mad }))? + "\n";
    emit(a.out.as_deref(), &text)
}

fn robust_cmd(a: RobustArgs) -> Result<()> {
    let (pipeline, cfg) = load_run(&a.run)?;
    let test = read_dataset(&a.test, Some(pipeline.model.config.class_count))?;
    let levels = noise_robustness(&pipeline, &test, &a.sigmas, a.run.seed.unwrap_or(cfg.seed))?;
    let text = serde_json::to_string_pretty(&json!({ "noise_levels": levels }))? + "\n";
    emit(a.out.as_deref(), &text)
}
