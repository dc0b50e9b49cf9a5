//! Classification metrics and embedding analyses.

use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::builder::{build_training_subgraph, EpochSampler, SubgraphConfig};
use crate::dataset::FeatureDataset;
use crate::error::{Error, Result};
use crate::knn::DistanceLookup;
use crate::nn::{normalize_adjacency, GcnModel};
use crate::pipeline::Pipeline;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccuracyMode {
    /// Fraction of correct predictions.
    Overall,
    /// Mean per-class recall over classes present in `truths`.
    Unweighted,
}

pub fn accuracy(preds: &[usize], truths: &[usize], mode: AccuracyMode) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::EmptyInput);
    }
    if preds.len() != truths.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions, {} truths",
            preds.len(),
            truths.len()
        )));
    }
    match mode {
        AccuracyMode::Overall => {
            let correct = preds.iter().zip(truths).filter(|(p, t)| p == t).count();
            Ok(correct as f64 / preds.len() as f64)
        }
        AccuracyMode::Unweighted => {
            let classes = truths.iter().max().map_or(0, |m| m + 1);
            let mut hits = vec![0usize; classes];
            let mut totals = vec![0usize; classes];
            for (p, t) in preds.iter().zip(truths) {
                totals[*t] += 1;
                if p == t {
                    hits[*t] += 1;
                }
            }
            let present: Vec<f64> = hits
                .iter()
                .zip(&totals)
                .filter(|(_, n)| **n > 0)
                .map(|(h, n)| *h as f64 / *n as f64)
                .collect();
            Ok(present.iter().sum::<f64>() / present.len() as f64)
        }
    }
}

/// Average precision of one ranking: mean precision at the ranks of the
/// positives. Scores are ranked descending, ties by ascending index.
pub fn average_precision(scores: ArrayView1<f64>, positive: &[bool]) -> Result<f64> {
    let total_pos = positive.iter().filter(|p| **p).count();
    if total_pos == 0 {
        return Err(Error::EmptyInput);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank0, &i) in order.iter().enumerate() {
        if positive[i] {
            hits += 1;
            sum += hits as f64 / (rank0 + 1) as f64;
        }
    }
    Ok(sum / total_pos as f64)
}

/// One-vs-rest AP per class and their mean.
pub fn mean_average_precision(scores: &Array2<f64>, truths: &[usize]) -> Result<(Vec<f64>, f64)> {
    if scores.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    if scores.nrows() != truths.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} score rows, {} truths",
            scores.nrows(),
            truths.len()
        )));
    }
    let mut per_class = Vec::with_capacity(scores.ncols());
    for c in 0..scores.ncols() {
        let positive: Vec<bool> = truths.iter().map(|t| *t == c).collect();
        let ap = average_precision(scores.column(c), &positive)
            .map_err(|_| Error::ClassWithoutPositives(c))?;
        per_class.push(ap);
    }
    let map = per_class.iter().sum::<f64>() / per_class.len() as f64;
    Ok((per_class, map))
}

/// Mean cosine distance over ordered pairs of distinct nonzero rows.
pub fn mad(embeddings: &Array2<f64>) -> Result<f64> {
    if embeddings.nrows() < 2 {
        return Err(Error::EmptyInput);
    }
    // (row, squared norm)
    let rows: Vec<(ArrayView1<f64>, f64)> = embeddings
        .outer_iter()
        .map(|r| (r, r.dot(&r)))
        .filter(|(_, n)| *n > 0.0)
        .collect();
    if rows.len() < 2 {
        return Err(Error::DegenerateEmbeddings);
    }
    let mut sum = 0.0;
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            let cos = rows[i].0.dot(&rows[j].0) / (rows[i].1 * rows[j].1).sqrt();
            sum += 2.0 * (1.0 - cos.clamp(-1.0, 1.0));
        }
    }
    Ok(sum / (rows.len() * (rows.len() - 1)) as f64)
}

fn euclid(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean silhouette with euclidean distances. Samples alone in their class
/// score 0, as does a sample with `max(a, b) = 0`.
pub fn silhouette(embeddings: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    let n = embeddings.nrows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if labels.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{n} rows, {} labels",
            labels.len()
        )));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; classes];
    for l in labels {
        sizes[*l] += 1;
    }
    if sizes.iter().filter(|s| **s > 0).count() < 2 {
        return Err(Error::SingleClass);
    }
    let mut total = 0.0;
    for i in 0..n {
        if sizes[labels[i]] == 1 {
            continue;
        }
        let mut sums = vec![0.0; classes];
        for j in 0..n {
            if i != j {
                sums[labels[j]] += euclid(embeddings.row(i), embeddings.row(j));
            }
        }
        let a = sums[labels[i]] / (sizes[labels[i]] - 1) as f64;
        let b = (0..classes)
            .filter(|&c| c != labels[i] && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// MAD of the two trunk layers, averaged over one epoch's worth of
/// training-style subgraphs (capped at `max_subgraphs`).
pub fn mad_per_layer<D: DistanceLookup + ?Sized>(
    model: &GcnModel,
    ds: &FeatureDataset,
    dm: &D,
    sub_cfg: &SubgraphConfig,
    max_subgraphs: usize,
) -> Result<[f64; 2]> {
    let mut rng = seed::stream(sub_cfg.rng_seed, 30);
    let sampler = EpochSampler::new(ds.unlabeled_indices(), sub_cfg.unlabeled_count);
    let mut sums = [0.0; 2];
    let mut counted = [0usize; 2];
    for chunk in sampler.epoch(&mut rng).iter().take(max_subgraphs.max(1)) {
        let batch = build_training_subgraph(ds, dm, sub_cfg, chunk, &mut rng)?;
        let adj = normalize_adjacency(&batch.graph);
        let cache = model.trunk_forward(&adj, batch.graph.node_features())?;
        for (layer, h) in [&cache.h1, &cache.h2].into_iter().enumerate() {
            match mad(h) {
                Ok(v) => {
                    sums[layer] += v;
                    counted[layer] += 1;
                }
                Err(Error::DegenerateEmbeddings) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok([0, 1].map(|l| {
        if counted[l] == 0 {
            0.0
        } else {
            sums[l] / counted[l] as f64
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseLevelResult {
    pub sigma: f64,
    pub accuracy: f64,
    /// Clean minus noisy accuracy; positive means degradation.
    pub drop: f64,
}

/// Accuracy drop when Gaussian noise of std `sigma` is added to the raw
/// test features. The inference seed is the same at every level.
pub fn noise_robustness(
    pipeline: &Pipeline,
    test: &FeatureDataset,
    sigmas: &[f64],
    seed: u64,
) -> Result<Vec<NoiseLevelResult>> {
    let labeled = test.labeled_indices();
    if labeled.is_empty() {
        return Err(Error::EmptyInput);
    }
    let test = test.select(&labeled);
    let truths: Vec<usize> = test.labels().iter().map(|l| l.expect("labeled")).collect();
    let score = |features: &Array2<f64>| -> Result<f64> {
        let preds = pipeline.predict(features, test.ids(), seed)?;
        let classes: Vec<usize> = preds.iter().map(|p| p.class).collect();
        accuracy(&classes, &truths, AccuracyMode::Overall)
    };
    let clean = score(test.features())?;
    let mut noise_rng = seed::stream(seed, 40);
    sigmas
        .iter()
        .map(|&sigma| {
            if sigma < 0.0 || !sigma.is_finite() {
                return Err(Error::InvalidConfig(format!("noise std {sigma}")));
            }
            let acc = if sigma == 0.0 {
                clean
            } else {
                let normal = Normal::new(0.0, sigma).expect("valid std");
                let noisy = test.features().mapv(|v| v + normal.sample(&mut noise_rng));
                score(&noisy)?
            };
            Ok(NoiseLevelResult {
                sigma,
                accuracy: acc,
                drop: clean - acc,
            })
        })
        .collect()
}

/// Adds i.i.d. Gaussian noise with std `sigma` to every entry.
pub fn perturb(features: &Array2<f64>, sigma: f64, rng: &mut impl Rng) -> Array2<f64> {
    if sigma == 0.0 {
        return features.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("valid std");
    features.mapv(|v| v + normal.sample(rng))
}

/// Machine-readable metrics document with stable keys.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub accuracy_overall: f64,
    pub accuracy_unweighted: f64,
    pub map: Option<f64>,
    /// `None` for classes without positives in the evaluated set.
    pub per_class_ap: Vec<Option<f64>>,
    pub mad_per_layer: Option<Vec<f64>>,
    pub silhouette: Option<f64>,
    pub loss_trace: Vec<f64>,
    pub config_echo: serde_json::Value,
}

impl MetricsReport {
    /// Accuracy and AP metrics from predictions; mAP averages the classes
    /// that have positives.
    pub fn from_predictions(
        classes: &[usize],
        probabilities: &Array2<f64>,
        truths: &[usize],
    ) -> Result<Self> {
        let overall = accuracy(classes, truths, AccuracyMode::Overall)?;
        let unweighted = accuracy(classes, truths, AccuracyMode::Unweighted)?;
        let per_class_ap: Vec<Option<f64>> = (0..probabilities.ncols())
            .map(|c| {
                let positive: Vec<bool> = truths.iter().map(|t| *t == c).collect();
                average_precision(probabilities.column(c), &positive).ok()
            })
            .collect();
        let present: Vec<f64> = per_class_ap.iter().flatten().copied().collect();
        let map = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
        Ok(MetricsReport {
            accuracy_overall: overall,
            accuracy_unweighted: unweighted,
            map,
            per_class_ap,
            mad_per_layer: None,
            silhouette: None,
            loss_trace: Vec::new(),
            config_echo: serde_json::Value::Null,
        })
    }

    /// Checks every metric against its closed range.
    pub fn in_range(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        unit(self.accuracy_overall)
            && unit(self.accuracy_unweighted)
            && self.map.is_none_or(unit)
            && self.per_class_ap.iter().flatten().all(|v| unit(*v))
            && self
                .mad_per_layer
                .as_ref()
                .is_none_or(|m| m.iter().all(|v| *v >= 0.0))
            && self.silhouette.is_none_or(|s| (-1.0..=1.0).contains(&s))
    }
}
