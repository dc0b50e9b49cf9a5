//! Training subgraphs, the full training graph and inference subgraphs.
//!
//! Edge rules shared by every builder:
//! * a labeled node gets `+1` edges to its two nearest same-label nodes and
//!   a `-1` edge to its farthest node;
//! * an unlabeled node gets `+1` edges to its two nearest nodes of any kind
//!   and a `-1` edge to its farthest node.
//!
//! Neighbor searches only look at nodes already selected into the graph. A
//! pair that is proposed twice keeps the weight it was first given.

use std::collections::HashMap;

use ndarray::{Array2, Axis};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::FeatureDataset;
use crate::error::{Error, Result};
use crate::graph::{EdgeSet, Provenance, PseudolabelStore, SignedGraph, SubgraphBatch};
use crate::knn::{query_neighbors, DistanceLookup, LabelFilter, NeighborMode};
use crate::seed::derive_seed;

/// Number of `+1` neighbors per node.
pub const POSITIVE_NEIGHBORS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SubgraphConfig {
    pub labeled_per_class: usize,
    pub unlabeled_count: usize,
    /// Random edges per test node at inference.
    pub test_edge_count: usize,
    pub rng_seed: u64,
}

impl SubgraphConfig {
    /// `T` derived from the subgraph composition at `P >= 0.99`.
    pub fn new(labeled_per_class: usize, unlabeled_count: usize, class_count: usize) -> Self {
        let test_edge_count = min_test_edges(
            (labeled_per_class * class_count).max(1),
            unlabeled_count,
            0.99,
        )
        .expect("valid composition");
        SubgraphConfig {
            labeled_per_class,
            unlabeled_count,
            test_edge_count,
            rng_seed: 0,
        }
    }

    /// 33 classes, 2 labeled per class, 5 unlabeled, 4 test edges.
    pub fn audioset() -> Self {
        SubgraphConfig {
            labeled_per_class: 2,
            unlabeled_count: 5,
            test_edge_count: 4,
            rng_seed: 0,
        }
    }

    /// 4 classes, 12 labeled per class, 5 unlabeled, 4 test edges.
    pub fn iemocap() -> Self {
        SubgraphConfig {
            labeled_per_class: 12,
            unlabeled_count: 5,
            test_edge_count: 4,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.labeled_per_class == 0 {
            return Err(Error::InvalidConfig(
                "labeled_per_class must be >= 1".into(),
            ));
        }
        if self.test_edge_count == 0 {
            return Err(Error::InvalidConfig("test_edge_count must be >= 1".into()));
        }
        Ok(())
    }

    pub fn subgraph_size(&self, class_count: usize) -> usize {
        self.labeled_per_class * class_count + self.unlabeled_count
    }
}

/// Adds edges for `nodes` (global indices) according to the shared rules.
///
/// `labels` is indexed globally; a node with `Some` label is wired with the
/// labeled rule.
fn wire<D: DistanceLookup + ?Sized>(
    dm: &D,
    nodes: &[usize],
    labels: &[Option<usize>],
) -> Result<Vec<(usize, usize, f64)>> {
    let mut edges = Vec::new();
    for &v in nodes {
        let positive = match labels[v] {
            Some(class) => query_neighbors(
                dm,
                v,
                nodes,
                NeighborMode::NearestK(POSITIVE_NEIGHBORS),
                Some(LabelFilter { labels, class }),
            ),
            None => query_neighbors(
                dm,
                v,
                nodes,
                NeighborMode::NearestK(POSITIVE_NEIGHBORS),
                None,
            ),
        };
        match positive {
            Ok(near) => edges.extend(near.into_iter().map(|u| (v, u, 1.0))),
            Err(Error::NoCandidates(_)) => {}
            Err(e) => return Err(e),
        }
        match query_neighbors(dm, v, nodes, NeighborMode::Farthest, None) {
            Ok(far) => edges.push((v, far[0], -1.0)),
            Err(Error::NoCandidates(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(edges)
}

fn assemble(
    ds_features: &Array2<f64>,
    nodes: &[usize],
    global_edges: &[(usize, usize, f64)],
) -> Result<SignedGraph> {
    let local: HashMap<usize, usize> = nodes.iter().enumerate().map(|(l, &g)| (g, l)).collect();
    let mut set = EdgeSet::default();
    for &(a, b, w) in global_edges {
        set.add(local[&a], local[&b], w);
    }
    SignedGraph::new(set.into_edges(), ds_features.select(Axis(0), nodes))
}

/// Draws `labeled_per_class` labeled nodes per class uniformly at random.
fn sample_labeled(
    by_class: &[Vec<usize>],
    per_class: usize,
    rng: &mut impl Rng,
    underflow: impl Fn(usize, usize) -> Error,
) -> Result<Vec<usize>> {
    let mut picked = Vec::with_capacity(per_class * by_class.len());
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < per_class {
            return Err(underflow(class, members.len()));
        }
        picked.extend(members.choose_multiple(rng, per_class).copied());
    }
    Ok(picked)
}

/// One class-balanced training subgraph.
///
/// Up to `unlabeled_count` nodes are drawn without replacement from
/// `unlabeled_pool`.
pub fn build_training_subgraph<D: DistanceLookup + ?Sized>(
    ds: &FeatureDataset,
    dm: &D,
    cfg: &SubgraphConfig,
    unlabeled_pool: &[usize],
    rng: &mut impl Rng,
) -> Result<SubgraphBatch> {
    cfg.validate()?;
    let labeled = sample_labeled(
        &ds.indices_by_class(),
        cfg.labeled_per_class,
        rng,
        |class, available| Error::InsufficientClassSamples {
            class,
            available,
            required: cfg.labeled_per_class,
        },
    )?;
    let take = cfg.unlabeled_count.min(unlabeled_pool.len());
    let unlabeled: Vec<usize> = unlabeled_pool.choose_multiple(rng, take).copied().collect();
    batch_from_nodes(ds, dm, labeled, unlabeled)
}

fn batch_from_nodes<D: DistanceLookup + ?Sized>(
    ds: &FeatureDataset,
    dm: &D,
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
) -> Result<SubgraphBatch> {
    let mut nodes = labeled;
    nodes.extend(unlabeled);
    if nodes.is_empty() {
        return Err(Error::EmptySubgraph);
    }
    let edges = wire(dm, &nodes, ds.labels())?;
    let graph = assemble(ds.features(), &nodes, &edges)?;
    let labels: Vec<Option<usize>> = nodes.iter().map(|&g| ds.label(g)).collect();
    let provenance = labels
        .iter()
        .map(|l| match l {
            Some(_) => Provenance::TrueLabel,
            None => Provenance::Unlabeled,
        })
        .collect();
    Ok(SubgraphBatch {
        graph,
        global_index: nodes,
        labels,
        provenance,
    })
}

/// A single graph over every training sample, wired with the same rules.
pub fn build_full_training_graph<D: DistanceLookup + ?Sized>(
    ds: &FeatureDataset,
    dm: &D,
) -> Result<SubgraphBatch> {
    if ds.labeled_count() == 0 {
        return Err(Error::NoLabeledNodes);
    }
    batch_from_nodes(ds, dm, (0..ds.len()).collect(), Vec::new())
}

/// Hands out disjoint chunks of the unlabeled pool, reshuffled every epoch,
/// so each pool index appears exactly once per epoch.
#[derive(Debug, Clone)]
pub struct EpochSampler {
    pool: Vec<usize>,
    chunk: usize,
}

impl EpochSampler {
    pub fn new(pool: Vec<usize>, chunk: usize) -> Self {
        EpochSampler { pool, chunk }
    }

    /// Subgraphs per epoch: `ceil(|pool| / chunk)`, at least one.
    pub fn steps_per_epoch(&self) -> usize {
        if self.pool.is_empty() || self.chunk == 0 {
            1
        } else {
            self.pool.len().div_ceil(self.chunk)
        }
    }

    pub fn epoch(&self, rng: &mut impl Rng) -> Vec<Vec<usize>> {
        let mut order = self.pool.clone();
        order.shuffle(rng);
        if order.is_empty() || self.chunk == 0 {
            return vec![Vec::new()];
        }
        order.chunks(self.chunk).map(<[usize]>::to_vec).collect()
    }
}

/// Probability that at least one of `t` random edges reaches a true-labeled
/// node when the test node picks among `n_true` true-labeled and `m_pseudo`
/// pseudolabeled nodes: `1 - C(m-1, t) / C(n+m-1, t)`, with `C(a, b) = 0`
/// for `b > a`.
pub fn true_label_hit_probability(n_true: usize, m_pseudo: usize, t: usize) -> f64 {
    if m_pseudo == 0 || t > m_pseudo - 1 {
        return 1.0;
    }
    let total = n_true + m_pseudo - 1;
    let mut log_ratio = 0.0;
    for i in 0..t {
        log_ratio += ((m_pseudo - 1 - i) as f64).ln() - ((total - i) as f64).ln();
    }
    1.0 - log_ratio.exp()
}

/// Smallest `T >= 1` with hit probability at least `p_target`.
pub fn min_test_edges(n_true: usize, m_pseudo: usize, p_target: f64) -> Result<usize> {
    if n_true == 0 {
        return Err(Error::InvalidConfig("n_true must be >= 1".into()));
    }
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "p_target {p_target} outside (0, 1)"
        )));
    }
    let mut t = 1;
    while true_label_hit_probability(n_true, m_pseudo, t) < p_target {
        t += 1;
    }
    Ok(t)
}

/// Inference subgraph: `labeled_per_class` true-labeled nodes per class,
/// `unlabeled_count` pseudolabeled nodes spread over classes, then every
/// test row wired to `test_edge_count` random training nodes with `+1`.
///
/// Test nodes never take part in a distance lookup.
pub fn build_inference_subgraph<D: DistanceLookup + ?Sized>(
    ds: &FeatureDataset,
    pseudo: &PseudolabelStore,
    dm: &D,
    cfg: &SubgraphConfig,
    test_features: &Array2<f64>,
    rng: &mut impl Rng,
) -> Result<SubgraphBatch> {
    let base: u64 = rng.random();
    let seeds: Vec<u64> = (0..test_features.nrows())
        .map(|b| derive_seed(base, b as u64))
        .collect();
    build_inference_subgraph_with_seeds(ds, pseudo, dm, cfg, test_features, &seeds, rng)
}

/// As [`build_inference_subgraph`] with explicit per-test-node wiring seeds.
pub fn build_inference_subgraph_with_seeds<D: DistanceLookup + ?Sized>(
    ds: &FeatureDataset,
    pseudo: &PseudolabelStore,
    dm: &D,
    cfg: &SubgraphConfig,
    test_features: &Array2<f64>,
    test_seeds: &[u64],
    rng: &mut impl Rng,
) -> Result<SubgraphBatch> {
    cfg.validate()?;
    let batch = test_features.nrows();
    if batch == 0 {
        return Err(Error::EmptyInput);
    }
    if test_seeds.len() != batch {
        return Err(Error::ShapeMismatch(format!(
            "{} test rows but {} seeds",
            batch,
            test_seeds.len()
        )));
    }
    if test_features.ncols() != ds.dim() {
        return Err(Error::ShapeMismatch(format!(
            "test features have {} columns, dataset has {}",
            test_features.ncols(),
            ds.dim()
        )));
    }

    let mut effective = ds.labels().to_vec();
    let mut pseudo_by_class = vec![Vec::new(); ds.class_count()];
    for i in ds.unlabeled_indices() {
        let p = pseudo.get(i).ok_or(Error::MissingPseudolabels(i))?;
        if p.class >= ds.class_count() {
            return Err(Error::LabelOutOfRange {
                row: i,
                label: p.class,
                class_count: ds.class_count(),
            });
        }
        effective[i] = Some(p.class);
        pseudo_by_class[p.class].push(i);
    }

    let true_nodes = sample_labeled(
        &ds.indices_by_class(),
        cfg.labeled_per_class,
        rng,
        |class, available| Error::ClassUnderflow {
            class,
            available,
            required: cfg.labeled_per_class,
        },
    )?;

    // round-robin over classes in random order for the pseudolabeled part
    for members in &mut pseudo_by_class {
        members.shuffle(rng);
    }
    let mut class_order: Vec<usize> = (0..ds.class_count()).collect();
    class_order.shuffle(rng);
    let mut pseudo_nodes = Vec::with_capacity(cfg.unlabeled_count);
    let mut cursor = vec![0usize; ds.class_count()];
    while pseudo_nodes.len() < cfg.unlabeled_count {
        let mut progressed = false;
        for &c in &class_order {
            if pseudo_nodes.len() == cfg.unlabeled_count {
                break;
            }
            if let Some(&node) = pseudo_by_class[c].get(cursor[c]) {
                pseudo_nodes.push(node);
                cursor[c] += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }

    let mut nodes = true_nodes;
    let true_count = nodes.len();
    nodes.extend(pseudo_nodes);
    let train_count = nodes.len();

    let edges = wire(dm, &nodes, &effective)?;
    let local: HashMap<usize, usize> = nodes.iter().enumerate().map(|(l, &g)| (g, l)).collect();
    let mut set = EdgeSet::default();
    for &(a, b, w) in &edges {
        set.add(local[&a], local[&b], w);
    }
    let t = cfg.test_edge_count.min(train_count);
    for (b, &seed) in test_seeds.iter().enumerate() {
        let mut wiring = ChaCha8Rng::seed_from_u64(seed);
        let targets = rand::seq::index::sample(&mut wiring, train_count, t);
        for target in targets.iter() {
            set.add(train_count + b, target, 1.0);
        }
    }

    let mut features = ds.features().select(Axis(0), &nodes);
    features
        .append(Axis(0), test_features.view())
        .expect("matching column count");
    let graph = SignedGraph::new(set.into_edges(), features)?;

    let mut labels: Vec<Option<usize>> = nodes.iter().map(|&g| effective[g]).collect();
    labels.extend(std::iter::repeat_n(None, batch));
    let mut provenance = vec![Provenance::TrueLabel; true_count];
    provenance.extend(std::iter::repeat_n(
        Provenance::PseudoLabel,
        train_count - true_count,
    ));
    provenance.extend(std::iter::repeat_n(Provenance::Test, batch));
    nodes.extend(0..batch);

    Ok(SubgraphBatch {
        graph,
        global_index: nodes,
        labels,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Pseudolabel;
    use crate::knn::{compute_distances, Metric};
    use rand::Rng;
    use std::collections::HashSet;

    fn dataset(n_per_class: usize, classes: usize, unlabeled: usize, seed: u64) -> FeatureDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = n_per_class * classes + unlabeled;
        let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
        let labels = (0..n)
            .map(|i| {
                if i < n_per_class * classes {
                    Some(i % classes)
                } else {
                    None
                }
            })
            .collect();
        FeatureDataset::with_default_ids(x, labels, classes).unwrap()
    }

    #[test]
    fn audioset_and_iemocap_sizes() {
        let ds = dataset(3, 33, 20, 1);
        let dm = compute_distances(ds.features(), Metric::Euclidean).unwrap();
        let pool = ds.unlabeled_indices();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = build_training_subgraph(&ds, &dm, &SubgraphConfig::audioset(), &pool, &mut rng)
            .unwrap();
        assert_eq!(g.node_count(), 71);
        assert!(g.is_class_balanced(33));

        let ds = dataset(15, 4, 20, 2);
        let dm = compute_distances(ds.features(), Metric::Euclidean).unwrap();
        let pool = ds.unlabeled_indices();
        let g =
            build_training_subgraph(&ds, &dm, &SubgraphConfig::iemocap(), &pool, &mut rng).unwrap();
        assert_eq!(g.node_count(), 53);
        assert_eq!(g.true_label_counts(4), vec![12; 4]);
    }

    #[test]
    fn two_node_degenerate_subgraph() {
        let ds = FeatureDataset::with_default_ids(
            ndarray::array![[0.0], [1.0]],
            vec![Some(0), Some(1)],
            2,
        )
        .unwrap();
        let dm = compute_distances(ds.features(), Metric::Euclidean).unwrap();
        let cfg = SubgraphConfig {
            labeled_per_class: 1,
            unlabeled_count: 0,
            test_edge_count: 1,
            rng_seed: 0,
        };
        let g = build_training_subgraph(&ds, &dm, &cfg, &[], &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.graph.edges().len(), 1);
        assert_eq!(g.graph.edges()[0].weight, -1.0);
    }

    #[test]
    fn insufficient_class_samples() {
        let ds = dataset(1, 3, 4, 5);
        let dm = compute_distances(ds.features(), Metric::Euclidean).unwrap();
        let err = build_training_subgraph(
            &ds,
            &dm,
            &SubgraphConfig::new(2, 2, 3),
            &ds.unlabeled_indices(),
            &mut ChaCha8Rng::seed_from_u64(0),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::InsufficientClassSamples {
                class: 0,
                available: 1,
                required: 2
            }
        ));
    }

    #[test]
    fn full_graph_all_labeled_rule_check() {
        // two classes of three points on a line; every node has exactly two
        // same-label peers and one farthest node
        let x = ndarray::array![[0.0], [1.0], [2.5], [10.0], [11.0], [13.0]];
        let labels = vec![Some(0), Some(0), Some(0), Some(1), Some(1), Some(1)];
        let ds = FeatureDataset::with_default_ids(x, labels.clone(), 2).unwrap();
        let dm = compute_distances(ds.features(), Metric::Euclidean).unwrap();
        let all: Vec<usize> = (0..6).collect();
        let proposed = wire(&dm, &all, &labels).unwrap();
        for v in 0..6 {
            let pos: Vec<_> = proposed.iter().filter(|e| e.0 == v && e.2 == 1.0).collect();
            let neg: Vec<_> = proposed
                .iter()
                .filter(|e| e.0 == v && e.2 == -1.0)
                .collect();
            assert_eq!(pos.len(), 2, "node {v}");
            assert_eq!(neg.len(), 1, "node {v}");
            for e in pos {
                assert_eq!(labels[e.1], labels[v]);
            }
        }
        // farthest: 0..2 -> 5, 3..5 -> 0
        let far: Vec<usize> = proposed
            .iter()
            .filter(|e| e.2 == -1.0)
            .map(|e| e.1)
            .collect();
        assert_eq!(far, vec![5, 5, 5, 0, 0, 0]);

        let g = build_full_training_graph(&ds, &dm).unwrap();
        // within-class triangles (3 + 3) plus {0,5},{1,5},{2,5},{3,0},{4,0}
        assert_eq!(g.graph.edges().len(), 11);
        assert_eq!(g.graph.edge_weight(0, 5), Some(-1.0));
        assert_eq!(g.graph.edge_weight(0, 1), Some(1.0));
    }

    #[test]
    fn full_graph_single_labeled_node_and_singleton() {
        let x = ndarray::array![[0.0], [1.0], [5.0], [6.0]];
        let ds = FeatureDataset::with_default_ids(x, vec![Some(1), None, None, None], 2).unwrap();
        let dm = compute_distances(ds.features(), Metric::Euclidean).unwrap();
        let g = build_full_training_graph(&ds, &dm).unwrap();
        // labeled node 0 proposes only its -1 edge to node 3
        assert_eq!(g.graph.edge_weight(0, 3), Some(-1.0));

        let one =
            FeatureDataset::with_default_ids(ndarray::array![[0.0]], vec![Some(0)], 2).unwrap();
        let dm = compute_distances(one.features(), Metric::Euclidean).unwrap();
        let g = build_full_training_graph(&one, &dm).unwrap();
        assert_eq!(g.node_count(), 1);
        assert!(g.graph.edges().is_empty());
    }

    #[test]
    fn epoch_sampler_covers_pool_once() {
        let sampler = EpochSampler::new((100..112).collect(), 5);
        assert_eq!(sampler.steps_per_epoch(), 3);
        let chunks = sampler.epoch(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(chunks.len(), 3);
        let mut all: Vec<usize> = chunks.concat();
        all.sort();
        assert_eq!(all, (100..112).collect::<Vec<_>>());
    }

    #[test]
    fn fixed_seed_gives_identical_subgraphs() {
        let ds = dataset(4, 3, 10, 8);
        let dm = compute_distances(ds.features(), Metric::Euclidean).unwrap();
        let cfg = SubgraphConfig::new(2, 4, 3);
        let a = build_training_subgraph(
            &ds,
            &dm,
            &cfg,
            &ds.unlabeled_indices(),
            &mut ChaCha8Rng::seed_from_u64(4),
        )
        .unwrap();
        let b = build_training_subgraph(
            &ds,
            &dm,
            &cfg,
            &ds.unlabeled_indices(),
            &mut ChaCha8Rng::seed_from_u64(4),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hypergeometric_edge_cases() {
        assert_eq!(min_test_edges(10, 1, 0.999).unwrap(), 1);
        assert_eq!(min_test_edges(10, 0, 0.5).unwrap(), 1);
        assert!(min_test_edges(66, 5, 0.99).unwrap() <= 4);
        assert_eq!(min_test_edges(10, 90, 0.9).unwrap(), 20);
        assert!(min_test_edges(0, 5, 0.9).is_err());
        assert!(min_test_edges(3, 5, 1.0).is_err());
    }

    #[test]
    fn hypergeometric_matches_product_formula() {
        // direct ratio of falling factorials
        let direct = |n: usize, m: usize, t: usize| {
            let mut r = 1.0;
            for i in 0..t {
                r *= (m as f64 - 1.0 - i as f64) / ((n + m - 1 - i) as f64);
            }
            1.0 - r
        };
        for t in 1..30 {
            let a = true_label_hit_probability(10, 90, t);
            assert!((a - direct(10, 90, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn hypergeometric_monte_carlo_at_returned_t() {
        let (n, m, p) = (10usize, 90usize, 0.9);
        let t = min_test_edges(n, m, p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let trials = 1_000_000;
        // population of n + m - 1 candidates, the first n are true-labeled
        let pop = n + m - 1;
        let mut hits = 0usize;
        for _ in 0..trials {
            let s = rand::seq::index::sample(&mut rng, pop, t);
            if s.iter().any(|i| i < n) {
                hits += 1;
            }
        }
        let mc = hits as f64 / trials as f64;
        assert!((mc - true_label_hit_probability(n, m, t)).abs() < 0.005);
    }

    fn pseudo_for(ds: &FeatureDataset) -> PseudolabelStore {
        let mut store = PseudolabelStore::new(0);
        for i in ds.unlabeled_indices() {
            store.insert(
                i,
                Pseudolabel {
                    class: i % ds.class_count(),
                    confidence: 0.9,
                },
            );
        }
        store
    }

    #[test]
    fn inference_subgraph_iemocap_single_test_node() {
        let ds = dataset(12, 4, 30, 3);
        let dm = compute_distances(ds.features(), Metric::Euclidean).unwrap();
        let pseudo = pseudo_for(&ds);
        let test = Array2::zeros((1, 3));
        let g = build_inference_subgraph(
            &ds,
            &pseudo,
            &dm,
            &SubgraphConfig::iemocap(),
            &test,
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        assert_eq!(g.node_count(), 54);
        assert_eq!(g.graph.degree(53), 4);
        assert_eq!(g.nodes_with(Provenance::TrueLabel).len(), 48);
        assert_eq!(g.nodes_with(Provenance::PseudoLabel).len(), 5);
        assert!(g.is_class_balanced(4));
    }

    #[test]
    fn inference_subgraph_errors_and_saturation() {
        let ds = dataset(3, 2, 6, 4);
        let dm = compute_distances(ds.features(), Metric::Euclidean).unwrap();
        let pseudo = pseudo_for(&ds);
        let mut cfg = SubgraphConfig::new(2, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);

        let empty = Array2::zeros((0, 3));
        assert!(matches!(
            build_inference_subgraph(&ds, &pseudo, &dm, &cfg, &empty, &mut rng),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            build_inference_subgraph(
                &ds,
                &PseudolabelStore::new(0),
                &dm,
                &cfg,
                &Array2::zeros((1, 3)),
                &mut rng
            ),
            Err(Error::MissingPseudolabels(_))
        ));

        cfg.test_edge_count = 7;
        let g = build_inference_subgraph(&ds, &pseudo, &dm, &cfg, &Array2::zeros((2, 3)), &mut rng)
            .unwrap();
        assert_eq!(g.node_count(), 9);
        assert_eq!(g.graph.degree(7), 7);
        assert_eq!(g.graph.degree(8), 7);
        assert_eq!(g.graph.edge_weight(7, 8), None);

        cfg.labeled_per_class = 4;
        assert!(matches!(
            build_inference_subgraph(&ds, &pseudo, &dm, &cfg, &Array2::zeros((1, 3)), &mut rng),
            Err(Error::ClassUnderflow { .. })
        ));
    }

    #[test]
    fn test_node_wiring_isolated_from_batch_composition() {
        let ds = dataset(5, 2, 8, 6);
        let dm = compute_distances(ds.features(), Metric::Euclidean).unwrap();
        let pseudo = pseudo_for(&ds);
        let cfg = SubgraphConfig::new(3, 4, 2);
        let test = Array2::from_shape_fn((3, 3), |(i, j)| (i * 3 + j) as f64);
        let seeds = [11u64, 22, 33];
        let full = build_inference_subgraph_with_seeds(
            &ds,
            &pseudo,
            &dm,
            &cfg,
            &test,
            &seeds,
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        let rows = test.select(Axis(0), &[0, 2]);
        let part = build_inference_subgraph_with_seeds(
            &ds,
            &pseudo,
            &dm,
            &cfg,
            &rows,
            &[11, 33],
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        let nbrs = |g: &SubgraphBatch, node: usize| -> HashSet<usize> {
            g.graph
                .edges()
                .iter()
                .filter(|e| e.source == node || e.target == node)
                .map(|e| if e.source == node { e.target } else { e.source })
                .collect()
        };
        let train = full.node_count() - 3;
        assert_eq!(nbrs(&full, train), nbrs(&part, train));
        assert_eq!(nbrs(&full, train + 2), nbrs(&part, train + 1));
    }
}
