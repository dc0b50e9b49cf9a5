//! Signed graphs, subgraph batches and pseudolabel bookkeeping.

use std::collections::{BTreeMap, HashSet};

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    /// Either `+1.0` (attract) or `-1.0` (repel).
    pub weight: f64,
}

/// Undirected graph with edge weights in `{+1, -1}`.
///
/// Each undirected edge is stored once. Self-loops never appear in the edge
/// list; they are added only when the adjacency is normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedGraph {
    node_count: usize,
    edges: Vec<Edge>,
    node_features: Array2<f64>,
}

impl SignedGraph {
    pub fn new(edges: Vec<Edge>, node_features: Array2<f64>) -> Result<Self> {
        let node_count = node_features.nrows();
        let mut seen = HashSet::with_capacity(edges.len());
        for e in &edges {
            if e.source >= node_count || e.target >= node_count {
                return Err(Error::InvalidDataset(format!(
                    "edge ({}, {}) outside {} nodes",
                    e.source, e.target, node_count
                )));
            }
            if e.source == e.target {
                return Err(Error::InvalidDataset(format!("self-loop at {}", e.source)));
            }
            if e.weight != 1.0 && e.weight != -1.0 {
                return Err(Error::InvalidDataset(format!(
                    "edge weight {} is not +-1",
                    e.weight
                )));
            }
            if !seen.insert(unordered(e.source, e.target)) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate edge ({}, {})",
                    e.source, e.target
                )));
            }
        }
        Ok(SignedGraph {
            node_count,
            edges,
            node_features,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_features(&self) -> &Array2<f64> {
        &self.node_features
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|e| e.source == node || e.target == node)
            .count()
    }

    /// Dense symmetric adjacency with entries in `{-1, 0, +1}`.
    pub fn adjacency(&self) -> Array2<f64> {
        let n = self.node_count;
        let mut a = Array2::zeros((n, n));
        for e in &self.edges {
            a[[e.source, e.target]] = e.weight;
            a[[e.target, e.source]] = e.weight;
        }
        a
    }

    pub fn edge_weight(&self, i: usize, j: usize) -> Option<f64> {
        let key = unordered(i, j);
        self.edges
            .iter()
            .find(|e| unordered(e.source, e.target) == key)
            .map(|e| e.weight)
    }
}

fn unordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Accumulates undirected edges; a repeated pair keeps its first weight.
#[derive(Debug, Default)]
pub(crate) struct EdgeSet {
    seen: HashSet<(usize, usize)>,
    edges: Vec<Edge>,
}

impl EdgeSet {
    pub(crate) fn add(&mut self, source: usize, target: usize, weight: f64) {
        if source == target {
            return;
        }
        if self.seen.insert(unordered(source, target)) {
            self.edges.push(Edge {
                source,
                target,
                weight,
            });
        }
    }

    pub(crate) fn into_edges(self) -> Vec<Edge> {
        self.edges
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    TrueLabel,
    PseudoLabel,
    Unlabeled,
    Test,
}

/// A subgraph together with its mapping back to the parent dataset.
///
/// For `Test` nodes `global_index` indexes the test batch, not the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphBatch {
    pub graph: SignedGraph,
    pub global_index: Vec<usize>,
    pub labels: Vec<Option<usize>>,
    pub provenance: Vec<Provenance>,
}

impl SubgraphBatch {
    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Nodes whose label is a ground-truth label.
    pub fn labeled_mask(&self) -> Vec<bool> {
        self.provenance
            .iter()
            .map(|p| *p == Provenance::TrueLabel)
            .collect()
    }

    pub fn nodes_with(&self, provenance: Provenance) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&i| self.provenance[i] == provenance)
            .collect()
    }

    /// Count of true-labeled nodes per class.
    pub fn true_label_counts(&self, class_count: usize) -> Vec<usize> {
        let mut counts = vec![0; class_count];
        for (p, l) in self.provenance.iter().zip(&self.labels) {
            if *p == Provenance::TrueLabel {
                if let Some(c) = l {
                    counts[*c] += 1;
                }
            }
        }
        counts
    }

    pub fn is_class_balanced(&self, class_count: usize) -> bool {
        let counts = self.true_label_counts(class_count);
        counts.windows(2).all(|w| w[0] == w[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pseudolabel {
    pub class: usize,
    /// Maximum softmax probability, in `[0, 1]`.
    pub confidence: f64,
}

/// Predicted classes for the unlabeled training samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PseudolabelStore {
    entries: BTreeMap<usize, Pseudolabel>,
    pub epoch_of_record: usize,
}

impl PseudolabelStore {
    pub fn new(epoch_of_record: usize) -> Self {
        PseudolabelStore {
            entries: BTreeMap::new(),
            epoch_of_record,
        }
    }

    pub fn insert(&mut self, index: usize, label: Pseudolabel) {
        assert!(
            (0.0..=1.0).contains(&label.confidence),
            "confidence {} outside [0, 1]",
            label.confidence
        );
        self.entries.insert(index, label);
    }

    pub fn get(&self, index: usize) -> Option<Pseudolabel> {
        self.entries.get(&index).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ascending dataset index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Pseudolabel)> + '_ {
        self.entries.iter().map(|(i, p)| (*i, *p))
    }

    pub fn indices(&self) -> Vec<usize> {
        self.entries.keys().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_self_loops_duplicates_and_bad_weights() {
        let x = Array2::zeros((3, 1));
        let e = |s, t, w| Edge {
            source: s,
            target: t,
            weight: w,
        };
        assert!(SignedGraph::new(vec![e(1, 1, 1.0)], x.clone()).is_err());
        assert!(SignedGraph::new(vec![e(0, 1, 1.0), e(1, 0, -1.0)], x.clone()).is_err());
        assert!(SignedGraph::new(vec![e(0, 1, 0.5)], x.clone()).is_err());
        assert!(SignedGraph::new(vec![e(0, 3, 1.0)], x.clone()).is_err());
        let g = SignedGraph::new(vec![e(0, 1, 1.0), e(2, 1, -1.0)], x).unwrap();
        assert_eq!(g.edge_weight(1, 2), Some(-1.0));
        assert_eq!(g.degree(1), 2);
    }

    #[test]
    fn edge_set_keeps_first_weight() {
        let mut set = EdgeSet::default();
        set.add(0, 1, 1.0);
        set.add(1, 0, -1.0);
        set.add(2, 2, 1.0);
        assert_eq!(
            set.into_edges(),
            vec![Edge {
                source: 0,
                target: 1,
                weight: 1.0
            }]
        );
    }

    proptest! {
        #[test]
        fn adjacency_is_symmetric(pairs in proptest::collection::vec((0usize..12, 0usize..12, any::<bool>()), 0..40)) {
            let mut set = EdgeSet::default();
            for (i, j, pos) in pairs {
                set.add(i, j, if pos { 1.0 } else { -1.0 });
            }
            let g = SignedGraph::new(set.into_edges(), Array2::zeros((12, 2))).unwrap();
            let a = g.adjacency();
            prop_assert_eq!(&a, &a.t());
            prop_assert!(a.iter().all(|v| *v == 0.0 || *v == 1.0 || *v == -1.0));
            prop_assert!(a.diag().iter().all(|v| *v == 0.0));
        }
    }
}
