//! End-to-end fit and predict on raw features, including standardization.

use ndarray::Array2;

use crate::builder::SubgraphConfig;
use crate::dataset::{FeatureDataset, Standardizer};
use crate::error::{Error, Result};
use crate::eval::{self, MetricsReport};
use crate::graph::PseudolabelStore;
use crate::inference::{self, DetailedPrediction, InferenceConfig, Prediction};
use crate::knn::{compute_distances, DistanceMatrix};
use crate::nn::{AdamState, Checkpoint, GcnModel};
use crate::trainer::{self, TrainConfig, TrainReport};

/// Everything needed to train and run inference.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub train: TrainConfig,
    pub subgraph: SubgraphConfig,
    pub inference: InferenceConfig,
    /// Z-score features with statistics fit on the training set.
    pub standardize: bool,
}

impl RunSettings {
    /// Defaults for a dataset with `class_count` classes: 2 labeled per
    /// class and 5 unlabeled per subgraph.
    pub fn new(class_count: usize) -> Self {
        RunSettings {
            train: TrainConfig::default(),
            subgraph: SubgraphConfig::new(2, 5, class_count),
            inference: InferenceConfig::default(),
            standardize: true,
        }
    }

    /// Sets both the training and subgraph seeds.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.train.rng_seed = seed;
        self.subgraph.rng_seed = seed;
        self
    }
}

/// A trained model together with the training pool it runs inference on.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub model: GcnModel,
    pub optimizer: AdamState,
    pub standardizer: Option<Standardizer>,
    /// Training pool after standardization.
    pub train_data: FeatureDataset,
    pub distances: DistanceMatrix,
    pub pseudolabels: PseudolabelStore,
    pub settings: RunSettings,
}

impl Pipeline {
    /// Fits the standardizer and model on `train`. A labeled `validation`
    /// set enables early stopping.
    pub fn fit(
        train: &FeatureDataset,
        validation: Option<&FeatureDataset>,
        settings: &RunSettings,
    ) -> Result<(Pipeline, TrainReport)> {
        let standardizer = settings
            .standardize
            .then(|| Standardizer::fit(train.features()));
        let apply = |ds: &FeatureDataset| match &standardizer {
            Some(s) => s.transform_dataset(ds),
            None => Ok(ds.clone()),
        };
        let train_data = apply(train)?;
        let validation = validation.map(apply).transpose()?;
        let trained = trainer::train_with_validation(
            &train_data,
            &settings.train,
            &settings.subgraph,
            validation.as_ref(),
            &settings.inference,
        )?;
        let pipeline = Pipeline {
            model: trained.model,
            optimizer: trained.optimizer,
            standardizer,
            train_data,
            distances: trained.distances,
            pseudolabels: trained.report.pseudolabels.clone(),
            settings: settings.clone(),
        };
        Ok((pipeline, trained.report))
    }

    /// Rebuilds a pipeline from a checkpoint and the raw training pool.
    /// Pseudolabels are recomputed when not supplied.
    pub fn restore(
        checkpoint: Checkpoint,
        train: &FeatureDataset,
        pseudolabels: Option<PseudolabelStore>,
        settings: &RunSettings,
    ) -> Result<Pipeline> {
        if checkpoint.model.config.input_dim != train.dim()
            || checkpoint.model.config.class_count != train.class_count()
        {
            return Err(Error::InvalidDataset(format!(
                "checkpoint expects {} features and {} classes, dataset has {} and {}",
                checkpoint.model.config.input_dim,
                checkpoint.model.config.class_count,
                train.dim(),
                train.class_count()
            )));
        }
        let train_data = match &checkpoint.standardizer {
            Some(s) => s.transform_dataset(train)?,
            None => train.clone(),
        };
        let distances = compute_distances(train_data.features(), settings.train.metric)?;
        let pseudolabels = match pseudolabels {
            Some(p) => p,
            None => trainer::assign_pseudolabels(
                &checkpoint.model,
                &train_data,
                &distances,
                &settings.subgraph,
            )?,
        };
        Ok(Pipeline {
            model: checkpoint.model,
            optimizer: checkpoint.adam,
            standardizer: checkpoint.standardizer,
            train_data,
            distances,
            pseudolabels,
            settings: settings.clone(),
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            model: self.model.clone(),
            adam: self.optimizer.clone(),
            standardizer: self.standardizer.clone(),
        }
    }

    /// Applies the stored standardization to raw features.
    pub fn transform(&self, raw: &Array2<f64>) -> Result<Array2<f64>> {
        if raw.ncols() != self.train_data.dim() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} features, got {}",
                self.train_data.dim(),
                raw.ncols()
            )));
        }
        Ok(match &self.standardizer {
            Some(s) => s.transform(raw),
            None => raw.clone(),
        })
    }

    /// Predicts raw test rows, averaging over the configured repeats.
    pub fn predict(&self, raw: &Array2<f64>, ids: &[String], seed: u64) -> Result<Vec<Prediction>> {
        let features = self.transform(raw)?;
        inference::predict_ensemble(
            &self.model,
            &self.train_data,
            &self.pseudolabels,
            &self.distances,
            &self.settings.subgraph,
            &self.settings.inference,
            &features,
            ids,
            seed,
        )
    }

    /// Single-wiring predictions with the test nodes' trunk activations.
    pub fn predict_detailed(
        &self,
        raw: &Array2<f64>,
        ids: &[String],
        seed: u64,
    ) -> Result<Vec<DetailedPrediction>> {
        let features = self.transform(raw)?;
        inference::predict_detailed(
            &self.model,
            &self.train_data,
            &self.pseudolabels,
            &self.distances,
            &self.settings.subgraph,
            &self.settings.inference,
            &features,
            ids,
            seed,
        )
    }

    /// Accuracy and AP on the labeled rows of `test`, plus the silhouette
    /// of the final trunk layer of the test nodes.
    pub fn evaluate(&self, test: &FeatureDataset, seed: u64) -> Result<MetricsReport> {
        let labeled = test.labeled_indices();
        if labeled.is_empty() {
            return Err(Error::EmptyInput);
        }
        let test = test.select(&labeled);
        let truths: Vec<usize> = test.labels().iter().map(|l| l.expect("labeled")).collect();
        let detailed = self.predict_detailed(test.features(), test.ids(), seed)?;
        let preds: Vec<Prediction> = if self.settings.inference.repeats > 1 {
            self.predict(test.features(), test.ids(), seed)?
        } else {
            detailed.iter().map(|d| d.prediction.clone()).collect()
        };
        let mut report = report_from_predictions(&preds, &truths, self.model.config.class_count)?;
        let hidden = Array2::from_shape_fn((detailed.len(), self.model.config.hidden), |(i, j)| {
            detailed[i].hidden[1][j]
        });
        report.silhouette = match eval::silhouette(&hidden, &truths) {
            Ok(s) => Some(s),
            Err(Error::SingleClass) => None,
            Err(e) => return Err(e),
        };
        Ok(report)
    }
}

/// Metrics from predictions aligned with `truths`.
pub fn report_from_predictions(
    preds: &[Prediction],
    truths: &[usize],
    class_count: usize,
) -> Result<MetricsReport> {
    if preds.len() != truths.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions, {} truths",
            preds.len(),
            truths.len()
        )));
    }
    let classes: Vec<usize> = preds.iter().map(|p| p.class).collect();
    let probs = Array2::from_shape_fn((preds.len(), class_count), |(i, c)| {
        preds[i].probabilities.get(c).copied().unwrap_or(0.0)
    });
    MetricsReport::from_predictions(&classes, &probs, truths)
}

/// Mean total loss per epoch.
pub fn loss_trace(report: &TrainReport) -> Vec<f64> {
    report.epochs.iter().map(|e| e.mean_total()).collect()
}
