//! In-memory feature datasets with optional class labels.
//!
//! A [`FeatureDataset`] is an `N x D` matrix of node attributes plus one
//! optional dense class index per row. Unlabeled rows carry `None`; there
//! is no sentinel class.

use std::collections::HashSet;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    features: Array2<f64>,
    labels: Vec<Option<usize>>,
    class_count: usize,
    ids: Vec<String>,
}

impl FeatureDataset {
    /// Builds a dataset and checks every invariant (see [`validate_dataset`]).
    pub fn new(
        features: Array2<f64>,
        labels: Vec<Option<usize>>,
        class_count: usize,
        ids: Vec<String>,
    ) -> Result<Self> {
        validate_dataset(FeatureDataset {
            features,
            labels,
            class_count,
            ids,
        })
    }

    /// Dataset with ids `s0, s1, ...`.
    pub fn with_default_ids(
        features: Array2<f64>,
        labels: Vec<Option<usize>>,
        class_count: usize,
    ) -> Result<Self> {
        let ids = (0..features.nrows()).map(|i| format!("s{i}")).collect();
        Self::new(features, labels, class_count, ids)
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.features.row(i)
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.labels[i]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.labels[i].is_some())
            .collect()
    }

    pub fn unlabeled_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.labels[i].is_none())
            .collect()
    }

    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_some()).count()
    }

    pub fn unlabeled_count(&self) -> usize {
        self.len() - self.labeled_count()
    }

    /// Labeled row indices grouped by class, ascending within each class.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut by_class = vec![Vec::new(); self.class_count];
        for (i, label) in self.labels.iter().enumerate() {
            if let Some(c) = label {
                by_class[*c].push(i);
            }
        }
        by_class
    }

    /// Copy with the same ids and labels but replaced features.
    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        if features.dim() != self.features.dim() {
            return Err(Error::ShapeMismatch(format!(
                "expected {:?}, got {:?}",
                self.features.dim(),
                features.dim()
            )));
        }
        Self::new(
            features,
            self.labels.clone(),
            self.class_count,
            self.ids.clone(),
        )
    }

    /// Copy with all labels removed.
    pub fn without_labels(&self) -> Self {
        FeatureDataset {
            features: self.features.clone(),
            labels: vec![None; self.len()],
            class_count: self.class_count,
            ids: self.ids.clone(),
        }
    }

    /// Row subset in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        FeatureDataset {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            class_count: self.class_count,
            ids: rows.iter().map(|&r| self.ids[r].clone()).collect(),
        }
    }
}

/// Returns the dataset iff all invariants hold.
pub fn validate_dataset(raw: FeatureDataset) -> Result<FeatureDataset> {
    let (n, d) = raw.features.dim();
    if n == 0 || d == 0 {
        return Err(Error::EmptyDataset);
    }
    if raw.labels.len() != n || raw.ids.len() != n {
        return Err(Error::InvalidDataset(format!(
            "{n} feature rows but {} labels and {} ids",
            raw.labels.len(),
            raw.ids.len()
        )));
    }
    for (row, values) in raw.features.outer_iter().enumerate() {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature(row));
        }
    }
    let any_label = raw.labels.iter().any(Option::is_some);
    if any_label && raw.class_count < 2 {
        return Err(Error::InvalidDataset(format!(
            "labeled dataset needs at least 2 classes, got {}",
            raw.class_count
        )));
    }
    for (row, label) in raw.labels.iter().enumerate() {
        if let Some(l) = *label {
            if l >= raw.class_count {
                return Err(Error::LabelOutOfRange {
                    row,
                    label: l,
                    class_count: raw.class_count,
                });
            }
        }
    }
    let mut seen = HashSet::with_capacity(n);
    for (row, id) in raw.ids.iter().enumerate() {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId {
                row,
                id: id.clone(),
            });
        }
    }
    Ok(raw)
}

/// Per-feature z-score transform fitted on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl Standardizer {
    /// Constant columns get unit scale so they map to zero.
    pub fn fit(features: &Array2<f64>) -> Self {
        let n = features.nrows() as f64;
        let mean = features.mean_axis(Axis(0)).expect("non-empty features");
        let mut var = Array1::<f64>::zeros(features.ncols());
        for row in features.outer_iter() {
            for ((v, x), m) in var.iter_mut().zip(row.iter()).zip(mean.iter()) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.mapv(|v| {
            let s = (v / n).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        });
        Standardizer { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, features: &Array2<f64>) -> Array2<f64> {
        let mut out = features.clone();
        for mut row in out.outer_iter_mut() {
            for ((x, m), s) in row.iter_mut().zip(self.mean.iter()).zip(self.std.iter()) {
                *x = (*x - m) / s;
            }
        }
        out
    }

    pub fn transform_dataset(&self, ds: &FeatureDataset) -> Result<FeatureDataset> {
        if ds.dim() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "standardizer fitted on {} features, dataset has {}",
                self.dim(),
                ds.dim()
            )));
        }
        ds.with_features(self.transform(ds.features()))
    }
}
