//! Gaussian-mixture stand-in datasets.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::FeatureDataset;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Isotropic per-feature standard deviation.
    pub cluster_std: f64,
    /// Norm of every class mean.
    pub separation: f64,
    /// Fraction of each class that keeps its label, in `(0, 1]`.
    pub label_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            classes: 4,
            per_class: 100,
            dim: 16,
            cluster_std: 1.0,
            separation: 3.0,
            label_fraction: 0.1,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 || self.per_class == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig(
                "synthetic data needs >= 2 classes, >= 1 sample per class and dim >= 1".into(),
            ));
        }
        if !(self.label_fraction > 0.0 && self.label_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "label fraction {} outside (0, 1]",
                self.label_fraction
            )));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(Error::InvalidConfig("separation must be > 0".into()));
        }
        if !(self.cluster_std >= 0.0 && self.cluster_std.is_finite()) {
            return Err(Error::InvalidConfig("cluster std must be >= 0".into()));
        }
        Ok(())
    }

    /// Labeled samples per class.
    pub fn labeled_per_class(&self) -> usize {
        ((self.label_fraction * self.per_class as f64 - 1e-9).ceil() as usize)
            .clamp(1, self.per_class)
    }

    /// Class means of norm `separation`. Directions are Gram-Schmidt
    /// orthogonalized while `classes <= dim`.
    pub fn class_means(&self) -> Array2<f64> {
        let mut rng = seed::stream(self.seed, 0);
        let mut means = Array2::<f64>::zeros((self.classes, self.dim));
        for c in 0..self.classes {
            let mut v: Array1<f64> =
                Array1::from_shape_simple_fn(self.dim, || StandardNormal.sample(&mut rng));
            if c < self.dim {
                for prev in 0..c {
                    let p = means.row(prev).to_owned() / self.separation;
                    let proj = v.dot(&p);
                    v.scaled_add(-proj, &p);
                }
            }
            let norm = v.dot(&v).sqrt();
            means.row_mut(c).assign(&(v * (self.separation / norm)));
        }
        means
    }
}

fn draw(
    means: &Array2<f64>,
    per_class: usize,
    std: f64,
    rng: &mut impl rand::Rng,
) -> (Array2<f64>, Vec<usize>) {
    let (classes, dim) = means.dim();
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        for _ in 0..per_class {
            let x = (0..dim)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(rng);
                    means[[c, j]] + std * z
                })
                .collect();
            rows.push((c, x));
        }
    }
    rows.shuffle(rng);
    let labels = rows.iter().map(|r| r.0).collect();
    let features = Array2::from_shape_fn((rows.len(), dim), |(i, j)| rows[i].1[j]);
    (features, labels)
}

/// Training pool with exactly `labeled_per_class()` labels per class.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<FeatureDataset> {
    Ok(generate_split(spec, 0)?.0)
}

/// Training pool plus a fully labeled test set drawn from the same mixture.
/// An empty test set is returned when `test_per_class` is 0.
pub fn generate_split(
    spec: &SyntheticSpec,
    test_per_class: usize,
) -> Result<(FeatureDataset, Option<FeatureDataset>)> {
    spec.validate()?;
    let means = spec.class_means();
    let mut rng = seed::stream(spec.seed, 1);
    let (features, classes) = draw(&means, spec.per_class, spec.cluster_std, &mut rng);
    let keep = spec.labeled_per_class();
    let mut seen = vec![0usize; spec.classes];
    let labels = classes
        .iter()
        .map(|&c| {
            seen[c] += 1;
            (seen[c] <= keep).then_some(c)
        })
        .collect();
    let train = FeatureDataset::with_default_ids(features, labels, spec.classes)?;
    let test = if test_per_class == 0 {
        None
    } else {
        let (features, classes) = draw(&means, test_per_class, spec.cluster_std, &mut rng);
        let ids = (0..features.nrows()).map(|i| format!("t{i}")).collect();
        Some(FeatureDataset::new(
            features,
            classes.into_iter().map(Some).collect(),
            spec.classes,
            ids,
        )?)
    };
    Ok((train, test))
}

/// True class of every training row, including the hidden ones.
pub fn ground_truth(spec: &SyntheticSpec) -> Result<Vec<usize>> {
    spec.validate()?;
    let means = spec.class_means();
    let mut rng = seed::stream(spec.seed, 1);
    Ok(draw(&means, spec.per_class, spec.cluster_std, &mut rng).1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nearest_centroid(means: &Array2<f64>, x: ndarray::ArrayView1<f64>) -> usize {
        (0..means.nrows())
            .min_by(|&a, &b| {
                let da = (&means.row(a) - &x).mapv(|v| v * v).sum();
                let db = (&means.row(b) - &x).mapv(|v| v * v).sum();
                da.total_cmp(&db)
            })
            .unwrap()
    }

    #[test]
    fn separated_mixture_is_centroid_classifiable() {
        let spec = SyntheticSpec {
            separation: 10.0,
            ..SyntheticSpec::default()
        };
        let (_, test) = generate_split(&spec, 100).unwrap();
        let test = test.unwrap();
        let means = spec.class_means();
        let correct = (0..test.len())
            .filter(|&i| nearest_centroid(&means, test.row(i)) == test.label(i).unwrap())
            .count();
        assert!(correct as f64 / test.len() as f64 > 0.99);
    }

    #[test]
    fn label_counts_are_exact() {
        let spec = SyntheticSpec::default();
        let ds = generate_synthetic(&spec).unwrap();
        assert_eq!(ds.len(), 400);
        assert!(ds.indices_by_class().iter().all(|c| c.len() == 10));
        let ds = generate_synthetic(&SyntheticSpec {
            label_fraction: 0.02,
            ..spec.clone()
        })
        .unwrap();
        assert!(ds.indices_by_class().iter().all(|c| c.len() == 2));
        let full = generate_synthetic(&SyntheticSpec {
            label_fraction: 1.0,
            ..spec
        })
        .unwrap();
        assert_eq!(full.unlabeled_count(), 0);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let spec = SyntheticSpec::default();
        assert_eq!(
            generate_split(&spec, 5).unwrap(),
            generate_split(&spec, 5).unwrap()
        );
        let other = SyntheticSpec {
            seed: 1,
            ..spec.clone()
        };
        assert_ne!(
            generate_synthetic(&spec).unwrap(),
            generate_synthetic(&other).unwrap()
        );
    }

    #[test]
    fn means_are_orthogonal_with_given_norm() {
        let means = SyntheticSpec::default().class_means();
        for a in 0..4 {
            assert!((means.row(a).dot(&means.row(a)).sqrt() - 3.0).abs() < 1e-12);
            for b in 0..a {
                assert!(means.row(a).dot(&means.row(b)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ground_truth_matches_visible_labels() {
        let spec = SyntheticSpec::default();
        let ds = generate_synthetic(&spec).unwrap();
        let truth = ground_truth(&spec).unwrap();
        for (l, t) in ds.labels().iter().zip(&truth) {
            if let Some(l) = l {
                assert_eq!(l, t);
            }
        }
    }

    #[test]
    fn invalid_specs() {
        for spec in [
            SyntheticSpec {
                label_fraction: 0.0,
                ..Default::default()
            },
            SyntheticSpec {
                separation: 0.0,
                ..Default::default()
            },
            SyntheticSpec {
                classes: 1,
                ..Default::default()
            },
        ] {
            assert!(generate_synthetic(&spec).is_err());
        }
    }
}
