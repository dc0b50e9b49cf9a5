//! Exact pairwise distances and neighbor queries.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
    Cosine,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::InvalidConfig(format!("unknown metric {other:?}"))),
        }
    }
}

/// Read access to pairwise distances between training samples.
///
/// Graph construction only ever goes through this trait, which lets tests
/// substitute an instrumented lookup.
pub trait DistanceLookup {
    fn node_count(&self) -> usize;
    fn distance(&self, i: usize, j: usize) -> f64;
}

/// Dense symmetric distance matrix, computed once per unordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
    metric: Metric,
}

impl DistanceMatrix {
    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.n, self.n), self.data.clone()).expect("square")
    }
}

impl DistanceLookup for DistanceMatrix {
    fn node_count(&self) -> usize {
        self.n
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }
}

fn euclidean(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Cosine distance `1 - cos`, clamped to `[0, 2]`. A zero vector is at
/// distance 1 from everything except another zero vector.
fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 && nb == 0.0 {
        0.0
    } else if na == 0.0 || nb == 0.0 {
        1.0
    } else {
        (1.0 - dot / (na * nb)).clamp(0.0, 2.0)
    }
}

pub fn compute_distances(features: &Array2<f64>, metric: Metric) -> Result<DistanceMatrix> {
    let n = features.nrows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    for (row, values) in features.outer_iter().enumerate() {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature(row));
        }
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = match metric {
                Metric::Euclidean => euclidean(features.row(i), features.row(j)),
                Metric::Cosine => cosine(features.row(i), features.row(j)),
            };
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, data, metric })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborMode {
    NearestK(usize),
    Farthest,
}

/// Restricts candidates to those whose label equals `class`.
#[derive(Debug, Clone, Copy)]
pub struct LabelFilter<'a> {
    pub labels: &'a [Option<usize>],
    pub class: usize,
}

/// Neighbors of `query` among `candidates` (global indices).
///
/// The query itself is never returned. Ties go to the smaller index.
pub fn query_neighbors<D: DistanceLookup + ?Sized>(
    dm: &D,
    query: usize,
    candidates: &[usize],
    mode: NeighborMode,
    same_label: Option<LabelFilter<'_>>,
) -> Result<Vec<usize>> {
    let mut scored: Vec<(f64, usize)> = candidates
        .iter()
        .copied()
        .filter(|&c| c != query)
        .filter(|&c| same_label.is_none_or(|f| f.labels[c] == Some(f.class)))
        .map(|c| (dm.distance(query, c), c))
        .collect();
    if scored.is_empty() {
        return Err(Error::NoCandidates(query));
    }
    match mode {
        NeighborMode::NearestK(k) => {
            scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            Ok(scored.into_iter().take(k).map(|(_, c)| c).collect())
        }
        NeighborMode::Farthest => {
            let best = scored
                .into_iter()
                .max_by(|a, b| match a.0.total_cmp(&b.0) {
                    Ordering::Equal => b.1.cmp(&a.1),
                    o => o,
                })
                .expect("non-empty");
            Ok(vec![best.1])
        }
    }
}
