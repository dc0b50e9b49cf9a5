//! Inductive classification of unseen samples through random test edges.

use ndarray::{Array2, Axis};

use crate::builder::{build_inference_subgraph, SubgraphConfig};
use crate::dataset::FeatureDataset;
use crate::error::{Error, Result};
use crate::graph::{Provenance, PseudolabelStore};
use crate::knn::DistanceLookup;
use crate::nn::{normalize_adjacency, GcnModel, Head};
use crate::seed::{self, derive_seed};
use crate::trainer::{argmax, softmax_rows};

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceConfig {
    /// Test nodes wired into one shared inference subgraph; `None` puts
    /// every row of a call into a single subgraph.
    pub test_batch: Option<usize>,
    /// Independently wired subgraphs averaged per test node.
    pub repeats: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            test_batch: None,
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub class: usize,
    pub probabilities: Vec<f64>,
    /// Seed of the inference subgraph that produced this prediction.
    pub seed: u64,
}

/// Prediction plus the trunk activations of the test node.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailedPrediction {
    pub prediction: Prediction,
    pub hidden: [Vec<f64>; 2],
}

fn check_inputs(
    model: &GcnModel,
    ds: &FeatureDataset,
    test_features: &Array2<f64>,
    test_ids: &[String],
) -> Result<()> {
    if model.config.class_count < 2 || ds.class_count() != model.config.class_count {
        return Err(Error::InvalidConfig(format!(
            "model has {} classes, dataset {}",
            model.config.class_count,
            ds.class_count()
        )));
    }
    if test_features.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    if test_ids.len() != test_features.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "{} test rows, {} ids",
            test_features.nrows(),
            test_ids.len()
        )));
    }
    if let Some(row) = test_features
        .outer_iter()
        .position(|r| r.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::NonFiniteFeature(row));
    }
    Ok(())
}

/// Classifies test rows with the classification branch only.
///
/// Rows are processed `test_batch` at a time (all at once by default);
/// chunk `k` uses an inference subgraph seeded with `derive_seed(seed, k)`. Never reads distances of
/// test rows and never mutates its inputs.
#[allow(clippy::too_many_arguments)]
pub fn predict<D: DistanceLookup + ?Sized>(
    model: &GcnModel,
    ds: &FeatureDataset,
    pseudo: &PseudolabelStore,
    dm: &D,
    sub_cfg: &SubgraphConfig,
    inf_cfg: &InferenceConfig,
    test_features: &Array2<f64>,
    test_ids: &[String],
    seed: u64,
) -> Result<Vec<Prediction>> {
    predict_detailed(
        model,
        ds,
        pseudo,
        dm,
        sub_cfg,
        inf_cfg,
        test_features,
        test_ids,
        seed,
    )
    .map(|v| v.into_iter().map(|d| d.prediction).collect())
}

#[allow(clippy::too_many_arguments)]
pub fn predict_detailed<D: DistanceLookup + ?Sized>(
    model: &GcnModel,
    ds: &FeatureDataset,
    pseudo: &PseudolabelStore,
    dm: &D,
    sub_cfg: &SubgraphConfig,
    inf_cfg: &InferenceConfig,
    test_features: &Array2<f64>,
    test_ids: &[String],
    seed: u64,
) -> Result<Vec<DetailedPrediction>> {
    check_inputs(model, ds, test_features, test_ids)?;
    let batch_size = inf_cfg.test_batch.unwrap_or(test_features.nrows()).max(1);
    let mut out = Vec::with_capacity(test_features.nrows());
    let rows: Vec<usize> = (0..test_features.nrows()).collect();
    for (k, chunk) in rows.chunks(batch_size).enumerate() {
        let chunk_seed = derive_seed(seed, k as u64);
        let mut rng = seed::stream(chunk_seed, 0);
        let features = test_features.select(Axis(0), chunk);
        let batch = build_inference_subgraph(ds, pseudo, dm, sub_cfg, &features, &mut rng)?;
        let adj = normalize_adjacency(&batch.graph);
        let cache = model.trunk_forward(&adj, batch.graph.node_features())?;
        let probs = softmax_rows(&model.head_forward(&cache, Head::Classify)?);
        for node in batch.nodes_with(Provenance::Test) {
            let row = chunk[batch.global_index[node]];
            let probabilities: Vec<f64> = probs.row(node).to_vec();
            let (class, _) = argmax(probabilities.iter().copied());
            out.push(DetailedPrediction {
                prediction: Prediction {
                    id: test_ids[row].clone(),
                    class,
                    probabilities,
                    seed: chunk_seed,
                },
                hidden: [cache.h1.row(node).to_vec(), cache.h2.row(node).to_vec()],
            });
        }
    }
    Ok(out)
}

/// Averages softmax vectors over `repeats` independently wired inference
/// subgraphs. Repeat 0 uses `seed` itself, so one repeat equals [`predict`].
#[allow(clippy::too_many_arguments)]
pub fn predict_ensemble<D: DistanceLookup + ?Sized>(
    model: &GcnModel,
    ds: &FeatureDataset,
    pseudo: &PseudolabelStore,
    dm: &D,
    sub_cfg: &SubgraphConfig,
    inf_cfg: &InferenceConfig,
    test_features: &Array2<f64>,
    test_ids: &[String],
    seed: u64,
) -> Result<Vec<Prediction>> {
    let repeats = inf_cfg.repeats;
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be >= 1".into()));
    }
    let mut acc = predict(
        model,
        ds,
        pseudo,
        dm,
        sub_cfg,
        inf_cfg,
        test_features,
        test_ids,
        seed,
    )?;
    if repeats == 1 {
        return Ok(acc);
    }
    for r in 1..repeats {
        let more = predict(
            model,
            ds,
            pseudo,
            dm,
            sub_cfg,
            inf_cfg,
            test_features,
            test_ids,
            derive_seed(seed, 1_000_000 + r as u64),
        )?;
        for (a, m) in acc.iter_mut().zip(more) {
            for (p, q) in a.probabilities.iter_mut().zip(m.probabilities) {
                *p += q;
            }
        }
    }
    for a in &mut acc {
        for p in &mut a.probabilities {
            *p /= repeats as f64;
        }
        a.class = argmax(a.probabilities.iter().copied()).0;
        a.seed = seed;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Standardizer;
    use crate::io::{generate_split, SyntheticSpec};
    use crate::knn::{compute_distances, DistanceMatrix, Metric};
    use crate::trainer::{assign_pseudolabels, train, TrainConfig};

    struct Fitted {
        model: GcnModel,
        train: FeatureDataset,
        test: FeatureDataset,
        dm: DistanceMatrix,
        pseudo: PseudolabelStore,
        sub: SubgraphConfig,
    }

    fn fitted(seed: u64) -> Fitted {
        let spec = SyntheticSpec {
            classes: 2,
            per_class: 100,
            dim: 8,
            separation: 6.0,
            seed,
            ..SyntheticSpec::default()
        };
        let (train_raw, test_raw) = generate_split(&spec, 50).unwrap();
        let scaler = Standardizer::fit(train_raw.features());
        let train_ds = scaler.transform_dataset(&train_raw).unwrap();
        let test = scaler.transform_dataset(&test_raw.unwrap()).unwrap();
        let mut sub = SubgraphConfig::new(10, 5, 2);
        sub.rng_seed = seed;
        let cfg = TrainConfig {
            epochs: 20,
            patience: None,
            hidden: 16,
            affine_classifier: true,
            rng_seed: seed,
            ..TrainConfig::default()
        };
        let (model, report) = train(&train_ds, &cfg, &sub).unwrap();
        let dm = compute_distances(train_ds.features(), Metric::Euclidean).unwrap();
        Fitted {
            model,
            train: train_ds,
            test,
            dm,
            pseudo: report.pseudolabels,
            sub,
        }
    }

    fn run(
        f: &Fitted,
        inf: &InferenceConfig,
        features: &Array2<f64>,
        ids: &[String],
        seed: u64,
    ) -> Vec<Prediction> {
        predict_ensemble(
            &f.model, &f.train, &f.pseudo, &f.dm, &f.sub, inf, features, ids, seed,
        )
        .unwrap()
    }

    fn accuracy(preds: &[Prediction], truth: &FeatureDataset) -> f64 {
        let hits = preds
            .iter()
            .zip(truth.labels())
            .filter(|(p, l)| Some(p.class) == **l)
            .count();
        hits as f64 / preds.len() as f64
    }

    /// Panics on any row outside the training pool.
    struct TrainRowsOnly<'a>(&'a DistanceMatrix);

    impl DistanceLookup for TrainRowsOnly<'_> {
        fn node_count(&self) -> usize {
            self.0.node_count()
        }
        fn distance(&self, i: usize, j: usize) -> f64 {
            let n = self.0.node_count();
            assert!(
                i < n && j < n,
                "distance lookup touched row {i} or {j} beyond {n}"
            );
            self.0.distance(i, j)
        }
    }

    #[test]
    fn single_repeat_equals_predict_and_rows_sum_to_one() {
        let f = fitted(0);
        let one = InferenceConfig {
            test_batch: Some(7),
            repeats: 1,
        };
        let plain = predict(
            &f.model,
            &f.train,
            &f.pseudo,
            &f.dm,
            &f.sub,
            &one,
            f.test.features(),
            f.test.ids(),
            5,
        )
        .unwrap();
        assert_eq!(run(&f, &one, f.test.features(), f.test.ids(), 5), plain);
        let many = InferenceConfig {
            test_batch: None,
            repeats: 4,
        };
        for p in plain
            .iter()
            .chain(&run(&f, &many, f.test.features(), f.test.ids(), 5))
        {
            assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert_eq!(p.class, argmax(p.probabilities.iter().copied()).0);
        }
    }

    #[test]
    fn same_seed_same_predictions() {
        let f = fitted(1);
        let inf = InferenceConfig::default();
        let a = run(&f, &inf, f.test.features(), f.test.ids(), 3);
        assert_eq!(a, run(&f, &inf, f.test.features(), f.test.ids(), 3));
    }

    #[test]
    fn never_reads_test_row_distances() {
        let f = fitted(2);
        let trap = TrainRowsOnly(&f.dm);
        let pseudo = assign_pseudolabels(&f.model, &f.train, &trap, &f.sub).unwrap();
        assert!(pseudo.iter().eq(f.pseudo.iter()));
        let inf = InferenceConfig {
            test_batch: Some(10),
            repeats: 2,
        };
        let preds = predict_ensemble(
            &f.model,
            &f.train,
            &pseudo,
            &trap,
            &f.sub,
            &inf,
            f.test.features(),
            f.test.ids(),
            0,
        )
        .unwrap();
        assert_eq!(preds.len(), f.test.len());
    }

    #[test]
    fn duplicate_of_cluster_member_takes_its_class() {
        let f = fitted(3);
        for class in 0..2 {
            // the labeled member closest to its class centroid
            let members = &f.train.indices_by_class()[class];
            let centroid = f
                .train
                .features()
                .select(Axis(0), members)
                .mean_axis(Axis(0))
                .unwrap();
            let member = *members
                .iter()
                .min_by(|&&a, &&b| {
                    let da = (&f.train.row(a) - &centroid).mapv(|v| v * v).sum();
                    let db = (&f.train.row(b) - &centroid).mapv(|v| v * v).sum();
                    da.total_cmp(&db)
                })
                .unwrap();
            // appended to the held-out rows so it shares their batch
            let mut features = f.test.features().clone();
            features.push_row(f.train.row(member)).unwrap();
            let mut ids = f.test.ids().to_vec();
            ids.push("dup".into());
            let hits = (0..5)
                .filter(|&s| {
                    let p = &run(&f, &InferenceConfig::default(), &features, &ids, s)[f.test.len()];
                    p.class == class && p.probabilities[class] > 0.5
                })
                .count();
            assert!(hits >= 3, "class {class}: {hits}/5");
        }
    }

    #[test]
    fn ensembling_does_not_materially_hurt() {
        let f = fitted(4);
        let single = InferenceConfig::default();
        let ten = InferenceConfig {
            test_batch: None,
            repeats: 10,
        };
        let (mut a1, mut a10) = (0.0, 0.0);
        for trial in 0..5 {
            a1 += accuracy(
                &run(&f, &single, f.test.features(), f.test.ids(), trial),
                &f.test,
            ) / 5.0;
            a10 += accuracy(
                &run(&f, &ten, f.test.features(), f.test.ids(), trial),
                &f.test,
            ) / 5.0;
        }
        assert!(a10 >= a1 - 0.01, "R=10 {a10} vs R=1 {a1}");
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = fitted(5);
        let inf = InferenceConfig::default();
        let empty = Array2::zeros((0, 8));
        assert!(matches!(
            predict(
                &f.model,
                &f.train,
                &f.pseudo,
                &f.dm,
                &f.sub,
                &inf,
                &empty,
                &[],
                0
            ),
            Err(Error::EmptyInput)
        ));
        let zero = InferenceConfig {
            test_batch: None,
            repeats: 0,
        };
        assert!(predict_ensemble(
            &f.model,
            &f.train,
            &f.pseudo,
            &f.dm,
            &f.sub,
            &zero,
            f.test.features(),
            f.test.ids(),
            0
        )
        .is_err());
        let mut bad = f.test.features().clone();
        bad[[0, 0]] = f64::NAN;
        assert!(matches!(
            predict(
                &f.model,
                &f.train,
                &f.pseudo,
                &f.dm,
                &f.sub,
                &inf,
                &bad,
                f.test.ids(),
                0
            ),
            Err(Error::NonFiniteFeature(0))
        ));
        let three = FeatureDataset::with_default_ids(
            f.train.features().clone(),
            f.train.labels().to_vec(),
            3,
        )
        .unwrap();
        assert!(matches!(
            predict(
                &f.model,
                &three,
                &f.pseudo,
                &f.dm,
                &f.sub,
                &inf,
                f.test.features(),
                f.test.ids(),
                0
            ),
            Err(Error::InvalidConfig(_))
        ));
    }
}
