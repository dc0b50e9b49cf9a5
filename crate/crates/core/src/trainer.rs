//! Joint optimization of node classification and self-supervised tasks.
//!
//! Per subgraph the minimized objective is
//! `ce + entropy_weight * entropy + ssl_weight * sum(ssl_task)`, where the
//! cross-entropy runs over true-labeled nodes, the entropy term over
//! unlabeled nodes, and every SSL task over its own transformed copy of the
//! subgraph features.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::Rng;

use crate::builder::{
    build_full_training_graph, build_training_subgraph, EpochSampler, SubgraphConfig,
};
use crate::dataset::FeatureDataset;
use crate::error::{Error, Result};
use crate::eval;
use crate::graph::{Provenance, Pseudolabel, PseudolabelStore, SubgraphBatch};
use crate::inference::{self, InferenceConfig};
use crate::knn::{compute_distances, DistanceLookup, DistanceMatrix, Metric};
use crate::nn::{
    adam_step, normalize_adjacency, AdamState, GcnModel, Head, ModelConfig, NormalizedAdjacency,
    ParamSet,
};
use crate::seed;
use crate::ssl::{
    make_instance, ssl_loss_and_grad, SslInstance, SslTask, DEFAULT_MASK_FRACTION,
    DEFAULT_NOISE_VARIANCE,
};

const STREAM_SUBGRAPHS: u64 = 10;
const STREAM_SSL: u64 = 11;
const STREAM_PSEUDOLABELS: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GraphMode {
    /// One class-balanced subgraph per optimizer step.
    #[default]
    Subgraph,
    /// One graph over all training samples. An epoch takes as many steps
    /// as the subgraph sampler would, so both modes get the same budget.
    FullGraph,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub entropy_weight: f64,
    pub ssl_weight: f64,
    pub epochs: usize,
    pub tasks: Vec<SslTask>,
    /// Epochs without validation improvement before stopping.
    pub patience: Option<usize>,
    pub rng_seed: u64,
    pub hidden: usize,
    pub bias: bool,
    /// Classify from the last trunk layer without a final propagation.
    pub affine_classifier: bool,
    pub learning_rate: f64,
    pub metric: Metric,
    pub noise_variance: f64,
    pub mask_fraction: f64,
    pub graph_mode: GraphMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            entropy_weight: 0.01,
            ssl_weight: 0.1,
            epochs: 200,
            tasks: Vec::new(),
            patience: Some(20),
            rng_seed: 0,
            hidden: crate::nn::DEFAULT_HIDDEN,
            bias: false,
            affine_classifier: false,
            learning_rate: 0.001,
            metric: Metric::Euclidean,
            noise_variance: DEFAULT_NOISE_VARIANCE,
            mask_fraction: DEFAULT_MASK_FRACTION,
            graph_mode: GraphMode::Subgraph,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.entropy_weight >= 0.0 && self.ssl_weight >= 0.0) {
            return Err(Error::InvalidConfig("loss weights must be >= 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning rate must be > 0".into()));
        }
        Ok(())
    }
}

/// Row-wise log-softmax.
pub fn log_softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.outer_iter_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    log_softmax_rows(logits).mapv(f64::exp)
}

fn check_logits(logits: &Array2<f64>, batch: &SubgraphBatch) -> Result<()> {
    if logits.nrows() != batch.node_count() {
        return Err(Error::ShapeMismatch(format!(
            "{} logit rows for {} nodes",
            logits.nrows(),
            batch.node_count()
        )));
    }
    Ok(())
}

/// Mean cross-entropy over true-labeled nodes, with its logit gradient.
pub fn ce_loss_and_grad(logits: &Array2<f64>, batch: &SubgraphBatch) -> Result<(f64, Array2<f64>)> {
    check_logits(logits, batch)?;
    let labeled = batch.nodes_with(Provenance::TrueLabel);
    if labeled.is_empty() {
        return Err(Error::NoLabeledNodes);
    }
    let log_p = log_softmax_rows(logits);
    let scale = 1.0 / labeled.len() as f64;
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut loss = 0.0;
    for &i in &labeled {
        let class = batch.labels[i].expect("true-labeled node has a label");
        loss -= log_p[[i, class]];
        for c in 0..logits.ncols() {
            let target = if c == class { 1.0 } else { 0.0 };
            grad[[i, c]] = (log_p[[i, c]].exp() - target) * scale;
        }
    }
    Ok((loss * scale, grad))
}

pub fn ce_loss(logits: &Array2<f64>, batch: &SubgraphBatch) -> Result<f64> {
    ce_loss_and_grad(logits, batch).map(|(l, _)| l)
}

/// Mean prediction entropy over unlabeled nodes (0 when there are none),
/// with its logit gradient.
pub fn entropy_loss_and_grad(
    logits: &Array2<f64>,
    batch: &SubgraphBatch,
) -> Result<(f64, Array2<f64>)> {
    check_logits(logits, batch)?;
    let unlabeled = batch.nodes_with(Provenance::Unlabeled);
    let mut grad = Array2::zeros(logits.raw_dim());
    if unlabeled.is_empty() {
        return Ok((0.0, grad));
    }
    let log_p = log_softmax_rows(logits);
    let scale = 1.0 / unlabeled.len() as f64;
    let mut loss = 0.0;
    for &i in &unlabeled {
        let h: f64 = -log_p.row(i).iter().map(|lp| lp.exp() * lp).sum::<f64>();
        loss += h;
        // dH/dz_k = -p_k (log p_k + H)
        for c in 0..logits.ncols() {
            let lp = log_p[[i, c]];
            grad[[i, c]] = -lp.exp() * (lp + h) * scale;
        }
    }
    Ok((loss * scale, grad))
}

pub fn entropy_loss(logits: &Array2<f64>, batch: &SubgraphBatch) -> Result<f64> {
    entropy_loss_and_grad(logits, batch).map(|(l, _)| l)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepLosses {
    pub ce: f64,
    pub entropy: f64,
    pub ssl: BTreeMap<SslTask, f64>,
    pub total: f64,
}

impl StepLosses {
    pub fn ssl_sum(&self) -> f64 {
        self.ssl.values().sum()
    }
}

/// Loss breakdown and exact gradients of the weighted total for one
/// subgraph. `instances` holds at most one instance per model SSL head.
pub fn loss_and_gradients(
    model: &GcnModel,
    batch: &SubgraphBatch,
    adj: &NormalizedAdjacency,
    instances: &[SslInstance],
    entropy_weight: f64,
    ssl_weight: f64,
) -> Result<(StepLosses, ParamSet)> {
    let mut grads = model.params.zeros_like();
    let x = batch.graph.node_features();
    let cache = model.trunk_forward(adj, x)?;
    let logits = model.head_forward(&cache, Head::Classify)?;
    let (ce, d_ce) = ce_loss_and_grad(&logits, batch)?;
    let (entropy, d_en) = entropy_loss_and_grad(&logits, batch)?;
    let d_logits = d_ce + d_en * entropy_weight;
    model.backward(adj, &cache, Head::Classify, &d_logits, &mut grads)?;

    let mut ssl = BTreeMap::new();
    for inst in instances {
        let head = Head::Ssl(inst.task);
        let cache = model.trunk_forward(adj, &inst.transformed)?;
        let pred = model.head_forward(&cache, head)?;
        let (loss, d_pred) = ssl_loss_and_grad(&pred, inst)?;
        model.backward(adj, &cache, head, &(d_pred * ssl_weight), &mut grads)?;
        ssl.insert(inst.task, loss);
    }
    let ssl_sum: f64 = ssl.values().sum();
    let total = ce + entropy_weight * entropy + ssl_weight * ssl_sum;
    Ok((
        StepLosses {
            ce,
            entropy,
            ssl,
            total,
        },
        grads,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub steps: Vec<StepLosses>,
    pub validation_accuracy: Option<f64>,
}

impl EpochRecord {
    pub fn mean_total(&self) -> f64 {
        self.steps.iter().map(|s| s.total).sum::<f64>() / self.steps.len() as f64
    }

    pub fn mean_ce(&self) -> f64 {
        self.steps.iter().map(|s| s.ce).sum::<f64>() / self.steps.len() as f64
    }

    pub fn mean_entropy(&self) -> f64 {
        self.steps.iter().map(|s| s.entropy).sum::<f64>() / self.steps.len() as f64
    }

    pub fn mean_ssl(&self) -> BTreeMap<SslTask, f64> {
        let mut out = BTreeMap::new();
        for s in &self.steps {
            for (t, v) in &s.ssl {
                *out.entry(*t).or_insert(0.0) += v / self.steps.len() as f64;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub steps_per_epoch: usize,
    /// Epoch whose parameters were kept (last epoch without validation).
    pub best_epoch: usize,
    pub pseudolabels: PseudolabelStore,
    pub wall_clock: Duration,
}

impl TrainReport {
    pub fn validation_trace(&self) -> Vec<f64> {
        self.epochs
            .iter()
            .filter_map(|e| e.validation_accuracy)
            .collect()
    }

    pub fn total_steps(&self) -> usize {
        self.epochs.iter().map(|e| e.steps.len()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: GcnModel,
    pub optimizer: AdamState,
    pub distances: DistanceMatrix,
    pub report: TrainReport,
}

/// Trains without validation data; runs all configured epochs.
pub fn train(
    ds: &FeatureDataset,
    cfg: &TrainConfig,
    sub_cfg: &SubgraphConfig,
) -> Result<(GcnModel, TrainReport)> {
    let trained = train_with_validation(ds, cfg, sub_cfg, None, &InferenceConfig::default())?;
    Ok((trained.model, trained.report))
}

/// Trains, evaluating validation accuracy after every epoch when a labeled
/// validation set is supplied. With a patience configured the parameters
/// of the best validation epoch are restored at the end. Validation rows
/// are classified with `inf_cfg`, the same way test rows will be.
pub fn train_with_validation(
    ds: &FeatureDataset,
    cfg: &TrainConfig,
    sub_cfg: &SubgraphConfig,
    validation: Option<&FeatureDataset>,
    inf_cfg: &InferenceConfig,
) -> Result<Trained> {
    cfg.validate()?;
    sub_cfg.validate()?;
    let started = Instant::now();
    let by_class = ds.indices_by_class();
    if ds.labeled_count() == 0 || by_class.iter().any(Vec::is_empty) {
        return Err(Error::InvalidDataset(
            "training needs at least one labeled sample per class".into(),
        ));
    }
    if let Some(val) = validation {
        if val.dim() != ds.dim() || val.labeled_count() == 0 {
            return Err(Error::InvalidDataset(
                "validation set must match the feature dimension and carry labels".into(),
            ));
        }
    }
    let distances = compute_distances(ds.features(), cfg.metric)?;
    let model_cfg = ModelConfig::new(ds.dim(), ds.class_count(), &cfg.tasks)
        .with_hidden(cfg.hidden)
        .with_bias(cfg.bias)
        .with_affine_classifier(cfg.affine_classifier);
    let mut model = GcnModel::new(model_cfg, cfg.rng_seed)?;
    let mut optimizer =
        AdamState::with_hyperparameters(&model.params, cfg.learning_rate, 0.9, 0.999, 1e-8);

    let mut subgraph_rng = seed::stream(cfg.rng_seed, STREAM_SUBGRAPHS);
    let mut ssl_rng = seed::stream(cfg.rng_seed, STREAM_SSL);
    let sampler = EpochSampler::new(ds.unlabeled_indices(), sub_cfg.unlabeled_count);
    let full_graph = match cfg.graph_mode {
        GraphMode::FullGraph => {
            let batch = build_full_training_graph(ds, &distances)?;
            let adj = normalize_adjacency(&batch.graph);
            Some((batch, adj))
        }
        GraphMode::Subgraph => None,
    };
    let steps_per_epoch = sampler.steps_per_epoch();

    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, ParamSet, AdamState)> = None;
    let mut best_epoch = cfg.epochs.saturating_sub(1);
    for epoch in 0..cfg.epochs {
        let mut steps = Vec::with_capacity(steps_per_epoch);
        let mut run_step = |batch: &SubgraphBatch, adj: &NormalizedAdjacency, step: usize| {
            let instances = cfg
                .tasks
                .iter()
                .map(|&t| {
                    make_instance(
                        t,
                        batch.graph.node_features(),
                        cfg.noise_variance,
                        cfg.mask_fraction,
                        &mut ssl_rng,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let (losses, grads) = loss_and_gradients(
                &model,
                batch,
                adj,
                &instances,
                cfg.entropy_weight,
                cfg.ssl_weight,
            )?;
            if !losses.total.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    step,
                    detail: format!("{losses:?}"),
                });
            }
            adam_step(&mut optimizer, &mut model.params, &grads)?;
            steps.push(losses);
            Ok(())
        };
        match &full_graph {
            Some((batch, adj)) => {
                for step in 0..steps_per_epoch {
                    run_step(batch, adj, step)?;
                }
            }
            None => {
                for (step, chunk) in sampler.epoch(&mut subgraph_rng).iter().enumerate() {
                    let batch =
                        build_training_subgraph(ds, &distances, sub_cfg, chunk, &mut subgraph_rng)?;
                    let adj = normalize_adjacency(&batch.graph);
                    run_step(&batch, &adj, step)?;
                }
            }
        }
        if !model.params.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                step: steps.len(),
                detail: "parameters became non-finite".into(),
            });
        }

        let validation_accuracy = match validation {
            Some(val) => Some(validation_accuracy(
                &model, ds, &distances, sub_cfg, inf_cfg, val,
            )?),
            None => None,
        };
        epochs.push(EpochRecord {
            epoch,
            steps,
            validation_accuracy,
        });

        if let (Some(acc), Some(patience)) = (validation_accuracy, cfg.patience) {
            let improved = best.as_ref().is_none_or(|(b, ..)| acc > *b);
            if improved {
                best = Some((acc, epoch, model.params.clone(), optimizer.clone()));
            } else if epoch - best.as_ref().map_or(0, |b| b.1) >= patience {
                break;
            }
        }
    }
    if let Some((_, epoch, params, opt)) = best {
        model.params = params;
        optimizer = opt;
        best_epoch = epoch;
    } else {
        best_epoch = best_epoch.min(epochs.len().saturating_sub(1));
    }

    let mut pseudolabels = assign_pseudolabels(&model, ds, &distances, sub_cfg)?;
    pseudolabels.epoch_of_record = best_epoch;
    let report = TrainReport {
        epochs,
        steps_per_epoch,
        best_epoch,
        pseudolabels,
        wall_clock: started.elapsed(),
    };
    Ok(Trained {
        model,
        optimizer,
        distances,
        report,
    })
}

fn validation_accuracy(
    model: &GcnModel,
    ds: &FeatureDataset,
    dm: &DistanceMatrix,
    sub_cfg: &SubgraphConfig,
    inf_cfg: &InferenceConfig,
    val: &FeatureDataset,
) -> Result<f64> {
    let pseudo = assign_pseudolabels(model, ds, dm, sub_cfg)?;
    let labeled = val.labeled_indices();
    let rows = val.select(&labeled);
    let preds = inference::predict_ensemble(
        model,
        ds,
        &pseudo,
        dm,
        sub_cfg,
        inf_cfg,
        rows.features(),
        rows.ids(),
        sub_cfg.rng_seed,
    )?;
    let predicted: Vec<usize> = preds.iter().map(|p| p.class).collect();
    let truth: Vec<usize> = rows.labels().iter().map(|l| l.expect("labeled")).collect();
    eval::accuracy(&predicted, &truth, eval::AccuracyMode::Overall)
}

/// Argmax class and confidence for every unlabeled training sample.
///
/// Unlabeled samples are visited in ascending index order, a chunk of
/// `unlabeled_count` at a time, each chunk placed in a class-balanced
/// training-style subgraph.
pub fn assign_pseudolabels<D: DistanceLookup + ?Sized>(
    model: &GcnModel,
    ds: &FeatureDataset,
    dm: &D,
    sub_cfg: &SubgraphConfig,
) -> Result<PseudolabelStore> {
    let mut rng = seed::stream(sub_cfg.rng_seed, STREAM_PSEUDOLABELS);
    let mut store = PseudolabelStore::new(0);
    let unlabeled = ds.unlabeled_indices();
    let chunk = sub_cfg.unlabeled_count.max(1);
    let cfg = SubgraphConfig {
        unlabeled_count: chunk,
        ..sub_cfg.clone()
    };
    for part in unlabeled.chunks(chunk) {
        let batch = build_training_subgraph(ds, dm, &cfg, part, &mut rng)?;
        let adj = normalize_adjacency(&batch.graph);
        let logits = model.forward(&adj, batch.graph.node_features(), Head::Classify)?;
        let probs = softmax_rows(&logits);
        for node in batch.nodes_with(Provenance::Unlabeled) {
            let (class, confidence) = argmax(probs.row(node).iter().copied());
            store.insert(
                batch.global_index[node],
                Pseudolabel {
                    class,
                    confidence: confidence.clamp(0.0, 1.0),
                },
            );
        }
    }
    Ok(store)
}

/// Index and value of the maximum; ties go to the lower index.
pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
}

/// Draws a fresh SSL instance per task for the given features.
pub fn ssl_instances(
    tasks: &[SslTask],
    features: &Array2<f64>,
    noise_variance: f64,
    mask_fraction: f64,
    rng: &mut impl Rng,
) -> Result<Vec<SslInstance>> {
    tasks
        .iter()
        .map(|&t| make_instance(t, features, noise_variance, mask_fraction, rng))
        .collect()
}

/// Largest relative error per parameter tensor between `analytic` and
/// central differences of `objective` with step `h`.
///
/// The relative error of one entry is `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn gradient_check(
    model: &GcnModel,
    analytic: &ParamSet,
    h: f64,
    objective: impl Fn(&GcnModel) -> Result<f64>,
) -> Result<Vec<(String, f64)>> {
    let names: Vec<(String, Vec<f64>)> = analytic
        .tensors()
        .into_iter()
        .map(|(name, t)| (name, t.to_vec()))
        .collect();
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(names.len());
    for (t, (name, grad)) in names.iter().enumerate() {
        let mut worst = 0.0f64;
        for (k, &a) in grad.iter().enumerate() {
            let original = probe.params.tensors_mut()[t][k];
            probe.params.tensors_mut()[t][k] = original + h;
            let plus = objective(&probe)?;
            probe.params.tensors_mut()[t][k] = original - h;
            let minus = objective(&probe)?;
            probe.params.tensors_mut()[t][k] = original;
            let numeric = (plus - minus) / (2.0 * h);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(err);
        }
        out.push((name.clone(), worst));
    }
    Ok(out)
}
