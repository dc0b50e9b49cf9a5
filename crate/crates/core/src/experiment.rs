//! Seeded comparison of training variants on a Gaussian mixture.
//!
//! Every arm sees the same training pool, validation rows and test rows
//! per seed; only the SSL task set and the graph mode differ.

use serde::Serialize;

use crate::builder::SubgraphConfig;
use crate::error::Result;
use crate::eval::noise_robustness;
use crate::io::synth::{generate_split, SyntheticSpec};
use crate::pipeline::{Pipeline, RunSettings};
use crate::ssl::SslTask;
use crate::trainer::GraphMode;

/// Largest labeled-per-class count placed in one subgraph.
pub const MAX_LABELED_PER_CLASS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    /// Mixture of the training pool; its seed is replaced per run.
    pub mixture: SyntheticSpec,
    /// Validation rows per class, drawn from the same mixture.
    pub validation_per_class: usize,
    pub test_per_class: usize,
    pub seeds: Vec<u64>,
    pub hidden: usize,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub affine_classifier: bool,
    pub repeats: usize,
    /// Std of the Gaussian noise added to test features, in raw units.
    pub noise_sigma: f64,
}

impl Protocol {
    /// 4 classes, 100 per class, 16 dimensions, 10% labels, 5 seeds.
    pub fn standard() -> Self {
        let mixture = SyntheticSpec::default();
        Protocol {
            noise_sigma: 0.5 * mixture.cluster_std,
            mixture,
            validation_per_class: 100,
            test_per_class: 100,
            seeds: (0..5).collect(),
            hidden: crate::nn::DEFAULT_HIDDEN,
            epochs: 200,
            patience: Some(20),
            affine_classifier: true,
            repeats: 30,
        }
    }

    pub fn with_label_fraction(mut self, fraction: f64) -> Self {
        self.mixture.label_fraction = fraction;
        self
    }

    /// Every labeled sample of a class joins each subgraph, up to
    /// [`MAX_LABELED_PER_CLASS`].
    pub fn labeled_per_class(&self) -> usize {
        self.mixture.labeled_per_class().min(MAX_LABELED_PER_CLASS)
    }

    pub fn settings(&self, arm: &Arm, seed: u64) -> RunSettings {
        let classes = self.mixture.classes;
        let mut s = RunSettings::new(classes);
        s.subgraph = SubgraphConfig::new(self.labeled_per_class(), 5, classes);
        s.train.tasks = arm.tasks.clone();
        s.train.graph_mode = arm.graph_mode;
        s.train.hidden = self.hidden;
        s.train.epochs = self.epochs;
        s.train.patience = self.patience;
        s.train.affine_classifier = self.affine_classifier;
        s.inference.repeats = self.repeats;
        s.with_seed(seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub name: String,
    pub tasks: Vec<SslTask>,
    pub graph_mode: GraphMode,
}

impl Arm {
    pub fn subgraph(name: &str, tasks: &[SslTask]) -> Self {
        Arm {
            name: name.into(),
            tasks: tasks.to_vec(),
            graph_mode: GraphMode::Subgraph,
        }
    }

    pub fn full_graph(name: &str, tasks: &[SslTask]) -> Self {
        Arm {
            graph_mode: GraphMode::FullGraph,
            ..Arm::subgraph(name, tasks)
        }
    }

    /// No SSL, then one arm per SSL task, all on subgraphs.
    pub fn ssl_variants() -> Vec<Arm> {
        let mut arms = vec![Arm::subgraph("none", &[])];
        arms.extend(SslTask::ALL.iter().map(|&t| Arm::subgraph(t.name(), &[t])));
        arms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmResult {
    pub name: String,
    /// Clean test accuracy per seed.
    pub accuracy: Vec<f64>,
    /// Clean minus noisy test accuracy per seed.
    pub noise_drop: Vec<f64>,
    pub best_epoch: Vec<usize>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

impl ArmResult {
    pub fn mean_accuracy(&self) -> f64 {
        mean(&self.accuracy)
    }

    pub fn mean_noise_drop(&self) -> f64 {
        mean(&self.noise_drop)
    }
}

/// Trains and scores every arm on every seed.
pub fn run_arms(protocol: &Protocol, arms: &[Arm]) -> Result<Vec<ArmResult>> {
    let mut results: Vec<ArmResult> = arms
        .iter()
        .map(|a| ArmResult {
            name: a.name.clone(),
            accuracy: Vec::new(),
            noise_drop: Vec::new(),
            best_epoch: Vec::new(),
        })
        .collect();
    for &seed in &protocol.seeds {
        let spec = SyntheticSpec {
            seed,
            ..protocol.mixture.clone()
        };
        let held_per_class = protocol.validation_per_class + protocol.test_per_class;
        let (train, held) = generate_split(&spec, held_per_class)?;
        let held = held.expect("held-out rows requested");
        // held-out rows are shuffled, so a prefix split keeps both parts random
        let n_val = protocol.validation_per_class * spec.classes;
        let validation = held.select(&(0..n_val).collect::<Vec<_>>());
        let test = held.select(&(n_val..held.len()).collect::<Vec<_>>());
        for (arm, result) in arms.iter().zip(&mut results) {
            let settings = protocol.settings(arm, seed);
            let (pipeline, report) = Pipeline::fit(&train, Some(&validation), &settings)?;
            let levels = noise_robustness(&pipeline, &test, &[0.0, protocol.noise_sigma], seed)?;
            result.accuracy.push(levels[0].accuracy);
            result.noise_drop.push(levels[1].drop);
            result.best_epoch.push(report.best_epoch);
        }
    }
    Ok(results)
}
