//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Unknown keys are
//! rejected. Every key has a default:
//!
//! | key | default |
//! |---|---|
//! | `seed` | 0 |
//! | `labeled_per_class` | 2 |
//! | `unlabeled_count` | 5 |
//! | `test_edges` | `auto` (smallest count reaching P >= 0.99) |
//! | `entropy_weight` | 0.01 |
//! | `ssl_weight` | 0.1 |
//! | `ssl` | `none` (`all` or a comma list of denoise, completion, shuffle) |
//! | `epochs` | 200 |
//! | `patience` | 20 (`none` disables early stopping) |
//! | `hidden` | 256 |
//! | `bias` | false |
//! | `affine_classifier` | false |
//! | `learning_rate` | 0.001 |
//! | `metric` | `euclidean` |
//! | `noise_variance` | 0.1 |
//! | `mask_fraction` | 0.1 |
//! | `graph_mode` | `subgraph` (or `full`) |
//! | `standardize` | true |
//! | `test_batch` | `all` (every test row in one inference subgraph) |
//! | `repeats` | 1 |
//! | `data`, `validation`, `test`, `out` | empty |

use std::fmt::Write as _;
use std::str::FromStr;

use crate::builder::{min_test_edges, SubgraphConfig};
use crate::error::{Error, Result};
use crate::inference::InferenceConfig;
use crate::knn::Metric;
use crate::pipeline::RunSettings;
use crate::ssl::SslTask;
use crate::trainer::{GraphMode, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub labeled_per_class: usize,
    pub unlabeled_count: usize,
    /// `None` derives the count from the subgraph composition.
    pub test_edges: Option<usize>,
    pub entropy_weight: f64,
    pub ssl_weight: f64,
    pub ssl: Vec<SslTask>,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub hidden: usize,
    pub bias: bool,
    pub affine_classifier: bool,
    pub learning_rate: f64,
    pub metric: Metric,
    pub noise_variance: f64,
    pub mask_fraction: f64,
    pub graph_mode: GraphMode,
    pub standardize: bool,
    /// `None` wires all test rows into one inference subgraph.
    pub test_batch: Option<usize>,
    pub repeats: usize,
    pub data: String,
    pub validation: String,
    pub test: String,
    pub out: String,
}

pub const KEYS: [&str; 25] = [
    "seed",
    "labeled_per_class",
    "unlabeled_count",
    "test_edges",
    "entropy_weight",
    "ssl_weight",
    "ssl",
    "epochs",
    "patience",
    "hidden",
    "bias",
    "affine_classifier",
    "learning_rate",
    "metric",
    "noise_variance",
    "mask_fraction",
    "graph_mode",
    "standardize",
    "test_batch",
    "repeats",
    "data",
    "validation",
    "test",
    "out",
    "version",
];

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let inference = InferenceConfig::default();
        RunConfig {
            seed: 0,
            labeled_per_class: 2,
            unlabeled_count: 5,
            test_edges: None,
            entropy_weight: train.entropy_weight,
            ssl_weight: train.ssl_weight,
            ssl: train.tasks,
            epochs: train.epochs,
            patience: train.patience,
            hidden: train.hidden,
            bias: train.bias,
            affine_classifier: train.affine_classifier,
            learning_rate: train.learning_rate,
            metric: train.metric,
            noise_variance: train.noise_variance,
            mask_fraction: train.mask_fraction,
            graph_mode: train.graph_mode,
            standardize: true,
            test_batch: inference.test_batch,
            repeats: inference.repeats,
            data: String::new(),
            validation: String::new(),
            test: String::new(),
            out: String::new(),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidConfig(format!(
            "{key}: expected true or false, got {value:?}"
        ))),
    }
}

fn parse_optional(key: &str, value: &str, none: &str) -> Result<Option<usize>> {
    if value == none {
        Ok(None)
    } else {
        parse_num(key, value).map(Some)
    }
}

pub fn parse_graph_mode(value: &str) -> Result<GraphMode> {
    match value {
        "subgraph" => Ok(GraphMode::Subgraph),
        "full" => Ok(GraphMode::FullGraph),
        _ => Err(Error::InvalidConfig(format!(
            "graph_mode: expected subgraph or full, got {value:?}"
        ))),
    }
}

fn graph_mode_name(mode: GraphMode) -> &'static str {
    match mode {
        GraphMode::Subgraph => "subgraph",
        GraphMode::FullGraph => "full",
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "seed" => self.seed = parse_num(key, value)?,
            "labeled_per_class" => self.labeled_per_class = parse_num(key, value)?,
            "unlabeled_count" => self.unlabeled_count = parse_num(key, value)?,
            "test_edges" => self.test_edges = parse_optional(key, value, "auto")?,
            "entropy_weight" => self.entropy_weight = parse_num(key, value)?,
            "ssl_weight" => self.ssl_weight = parse_num(key, value)?,
            "ssl" => self.ssl = SslTask::parse_set(value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "patience" => self.patience = parse_optional(key, value, "none")?,
            "hidden" => self.hidden = parse_num(key, value)?,
            "bias" => self.bias = parse_bool(key, value)?,
            "affine_classifier" => self.affine_classifier = parse_bool(key, value)?,
            "learning_rate" => self.learning_rate = parse_num(key, value)?,
            "metric" => self.metric = value.parse()?,
            "noise_variance" => self.noise_variance = parse_num(key, value)?,
            "mask_fraction" => self.mask_fraction = parse_num(key, value)?,
            "graph_mode" => self.graph_mode = parse_graph_mode(value)?,
            "standardize" => self.standardize = parse_bool(key, value)?,
            "test_batch" => self.test_batch = parse_optional(key, value, "all")?,
            "repeats" => self.repeats = parse_num(key, value)?,
            "data" => self.data = value.to_string(),
            "validation" => self.validation = value.to_string(),
            "test" => self.test = value.to_string(),
            "out" => self.out = value.to_string(),
            // written by manifests, informational only
            "version" => {}
            _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies every setting in `text` on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", n + 1))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Key/value pairs in canonical order, excluding `version`.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<usize>, none: &str| v.map_or(none.to_string(), |n| n.to_string());
        vec![
            ("seed", self.seed.to_string()),
            ("labeled_per_class", self.labeled_per_class.to_string()),
            ("unlabeled_count", self.unlabeled_count.to_string()),
            ("test_edges", opt(self.test_edges, "auto")),
            ("entropy_weight", format!("{:?}", self.entropy_weight)),
            ("ssl_weight", format!("{:?}", self.ssl_weight)),
            ("ssl", SslTask::format_set(&self.ssl)),
            ("epochs", self.epochs.to_string()),
            ("patience", opt(self.patience, "none")),
            ("hidden", self.hidden.to_string()),
            ("bias", self.bias.to_string()),
            ("affine_classifier", self.affine_classifier.to_string()),
            ("learning_rate", format!("{:?}", self.learning_rate)),
            ("metric", self.metric.to_string()),
            ("noise_variance", format!("{:?}", self.noise_variance)),
            ("mask_fraction", format!("{:?}", self.mask_fraction)),
            ("graph_mode", graph_mode_name(self.graph_mode).to_string()),
            ("standardize", self.standardize.to_string()),
            ("test_batch", opt(self.test_batch, "all")),
            ("repeats", self.repeats.to_string()),
            ("data", self.data.clone()),
            ("validation", self.validation.clone()),
            ("test", self.test.clone()),
            ("out", self.out.clone()),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            writeln!(out, "{k} = {v}").expect("string write");
        }
        out
    }

    /// Resolved settings for a dataset with `class_count` classes.
    pub fn settings(&self, class_count: usize) -> Result<RunSettings> {
        let test_edge_count = match self.test_edges {
            Some(t) => t,
            None => min_test_edges(
                (self.labeled_per_class * class_count).max(1),
                self.unlabeled_count,
                0.99,
            )?,
        };
        let settings = RunSettings {
            train: TrainConfig {
                entropy_weight: self.entropy_weight,
                ssl_weight: self.ssl_weight,
                epochs: self.epochs,
                tasks: self.ssl.clone(),
                patience: self.patience,
                rng_seed: self.seed,
                hidden: self.hidden,
                bias: self.bias,
                affine_classifier: self.affine_classifier,
                learning_rate: self.learning_rate,
                metric: self.metric,
                noise_variance: self.noise_variance,
                mask_fraction: self.mask_fraction,
                graph_mode: self.graph_mode,
            },
            subgraph: SubgraphConfig {
                labeled_per_class: self.labeled_per_class,
                unlabeled_count: self.unlabeled_count,
                test_edge_count,
                rng_seed: self.seed,
            },
            inference: InferenceConfig {
                test_batch: self.test_batch,
                repeats: self.repeats,
            },
            standardize: self.standardize,
        };
        settings.train.validate()?;
        settings.subgraph.validate()?;
        if settings.inference.repeats == 0 || settings.inference.test_batch == Some(0) {
            return Err(Error::InvalidConfig(
                "test_batch and repeats must be >= 1".into(),
            ));
        }
        Ok(settings)
    }
}
