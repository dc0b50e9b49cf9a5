//! Self-supervised pretext tasks on subgraph node features.
//!
//! Every task transforms only node attributes; edges are left untouched.
//!
//! * denoise: add `N(0, eps)` noise to every entry, reconstruct the clean
//!   features, loss `||Z~ - Z||_F^2 / n`;
//! * completion: zero a random subset of rows, reconstruct them, loss
//!   `||Z~_m - Z_m||_F^2 / |m|` over the masked rows only;
//! * shuffle: permute the rows of a random subset, classify each node of the
//!   subset as unchanged (1) or moved (0) with mean binary cross-entropy.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::SubgraphBatch;

pub const DEFAULT_NOISE_VARIANCE: f64 = 0.1;
pub const DEFAULT_MASK_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SslTask {
    Denoise,
    Completion,
    Shuffle,
}

impl SslTask {
    pub const ALL: [SslTask; 3] = [SslTask::Denoise, SslTask::Completion, SslTask::Shuffle];

    pub fn name(self) -> &'static str {
        match self {
            SslTask::Denoise => "denoise",
            SslTask::Completion => "completion",
            SslTask::Shuffle => "shuffle",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn bit(self) -> u32 {
        1 << self.index()
    }

    /// Head width for input dimension `d`.
    pub fn output_dim(self, d: usize) -> usize {
        match self {
            SslTask::Denoise | SslTask::Completion => d,
            SslTask::Shuffle => 1,
        }
    }

    /// Parses `none`, `all`, or a comma separated list of task names.
    pub fn parse_set(s: &str) -> Result<Vec<SslTask>> {
        let s = s.trim();
        if s.is_empty() || s == "none" {
            return Ok(Vec::new());
        }
        if s == "all" {
            return Ok(Self::ALL.to_vec());
        }
        let mut tasks = s
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<Result<Vec<SslTask>>>()?;
        tasks.sort();
        tasks.dedup();
        Ok(tasks)
    }

    pub fn format_set(tasks: &[SslTask]) -> String {
        if tasks.is_empty() {
            "none".to_string()
        } else {
            tasks.iter().map(|t| t.name()).collect::<Vec<_>>().join(",")
        }
    }
}

impl fmt::Display for SslTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SslTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "denoise" => Ok(SslTask::Denoise),
            "completion" => Ok(SslTask::Completion),
            "shuffle" => Ok(SslTask::Shuffle),
            other => Err(Error::InvalidConfig(format!("unknown SSL task {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SslTarget {
    /// The clean feature matrix.
    Denoise { original: Array2<f64> },
    /// Masked row indices and their clean rows, in the same order.
    Completion {
        masked: Vec<usize>,
        original_rows: Array2<f64>,
    },
    /// Shuffled row indices and per-row `1.0` (unchanged) / `0.0` (moved).
    Shuffle {
        shuffled: Vec<usize>,
        unchanged: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SslInstance {
    pub task: SslTask,
    pub transformed: Array2<f64>,
    pub target: SslTarget,
    pub mask_fraction: f64,
    pub noise_variance: f64,
}

fn subset_size(fraction: f64, n: usize, min: usize) -> usize {
    ((fraction * n as f64).round() as usize).max(min).min(n)
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "mask fraction {fraction} outside (0, 1]"
        )))
    }
}

pub fn make_denoise(g: &SubgraphBatch, variance: f64, rng: &mut impl Rng) -> Result<SslInstance> {
    denoise_features(g.graph.node_features(), variance, rng)
}

pub fn denoise_features(
    features: &Array2<f64>,
    variance: f64,
    rng: &mut impl Rng,
) -> Result<SslInstance> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise variance {variance} must be positive"
        )));
    }
    let normal = Normal::new(0.0, variance.sqrt()).expect("positive std");
    let mut transformed = features.clone();
    for v in transformed.iter_mut() {
        *v += normal.sample(rng);
    }
    Ok(SslInstance {
        task: SslTask::Denoise,
        transformed,
        target: SslTarget::Denoise {
            original: features.clone(),
        },
        mask_fraction: 0.0,
        noise_variance: variance,
    })
}

pub fn make_completion(
    g: &SubgraphBatch,
    fraction: f64,
    rng: &mut impl Rng,
) -> Result<SslInstance> {
    completion_features(g.graph.node_features(), fraction, rng)
}

pub fn completion_features(
    features: &Array2<f64>,
    fraction: f64,
    rng: &mut impl Rng,
) -> Result<SslInstance> {
    check_fraction(fraction)?;
    let n = features.nrows();
    let k = subset_size(fraction, n, 1);
    let mut masked = rand::seq::index::sample(rng, n, k).into_vec();
    masked.sort_unstable();
    let original_rows = features.select(ndarray::Axis(0), &masked);
    let mut transformed = features.clone();
    for &i in &masked {
        transformed.row_mut(i).fill(0.0);
    }
    Ok(SslInstance {
        task: SslTask::Completion,
        transformed,
        target: SslTarget::Completion {
            masked,
            original_rows,
        },
        mask_fraction: fraction,
        noise_variance: 0.0,
    })
}

pub fn make_shuffle(g: &SubgraphBatch, fraction: f64, rng: &mut impl Rng) -> Result<SslInstance> {
    shuffle_features(g.graph.node_features(), fraction, rng)
}

pub fn shuffle_features(
    features: &Array2<f64>,
    fraction: f64,
    rng: &mut impl Rng,
) -> Result<SslInstance> {
    check_fraction(fraction)?;
    let n = features.nrows();
    let k = subset_size(fraction, n, 2);
    let mut shuffled = rand::seq::index::sample(rng, n, k).into_vec();
    shuffled.sort_unstable();
    let mut sources = shuffled.clone();
    sources.shuffle(rng);
    let mut transformed = features.clone();
    for (&dst, &src) in shuffled.iter().zip(&sources) {
        transformed.row_mut(dst).assign(&features.row(src));
    }
    let unchanged = shuffled
        .iter()
        .map(|&i| {
            if transformed.row(i) == features.row(i) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(SslInstance {
        task: SslTask::Shuffle,
        transformed,
        target: SslTarget::Shuffle {
            shuffled,
            unchanged,
        },
        mask_fraction: fraction,
        noise_variance: 0.0,
    })
}

/// Builds the instance for `task` with the given noise variance and mask
/// fraction.
pub fn make_instance(
    task: SslTask,
    features: &Array2<f64>,
    noise_variance: f64,
    mask_fraction: f64,
    rng: &mut impl Rng,
) -> Result<SslInstance> {
    match task {
        SslTask::Denoise => denoise_features(features, noise_variance, rng),
        SslTask::Completion => completion_features(features, mask_fraction, rng),
        SslTask::Shuffle => shuffle_features(features, mask_fraction, rng),
    }
}

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn ssl_loss(predictions: &Array2<f64>, instance: &SslInstance) -> Result<f64> {
    ssl_loss_and_grad(predictions, instance).map(|(l, _)| l)
}

/// Loss value and its gradient with respect to `predictions`.
pub fn ssl_loss_and_grad(
    predictions: &Array2<f64>,
    instance: &SslInstance,
) -> Result<(f64, Array2<f64>)> {
    let n = instance.transformed.nrows();
    let expected_cols = instance.task.output_dim(instance.transformed.ncols());
    if predictions.dim() != (n, expected_cols) {
        return Err(Error::ShapeMismatch(format!(
            "{} predictions {:?}, expected {:?}",
            instance.task,
            predictions.dim(),
            (n, expected_cols)
        )));
    }
    let mut grad = Array2::zeros(predictions.raw_dim());
    let loss = match &instance.target {
        SslTarget::Denoise { original } => {
            let diff = predictions - original;
            let scale = 1.0 / n as f64;
            grad.assign(&(&diff * (2.0 * scale)));
            diff.iter().map(|d| d * d).sum::<f64>() * scale
        }
        SslTarget::Completion {
            masked,
            original_rows,
        } => {
            let scale = 1.0 / masked.len() as f64;
            let mut sum = 0.0;
            for (k, &i) in masked.iter().enumerate() {
                for j in 0..predictions.ncols() {
                    let d = predictions[[i, j]] - original_rows[[k, j]];
                    sum += d * d;
                    grad[[i, j]] = 2.0 * d * scale;
                }
            }
            sum * scale
        }
        SslTarget::Shuffle {
            shuffled,
            unchanged,
        } => {
            let scale = 1.0 / shuffled.len() as f64;
            let mut sum = 0.0;
            for (&i, &y) in shuffled.iter().zip(unchanged) {
                let s = predictions[[i, 0]];
                // -[y log sig(s) + (1-y) log(1-sig(s))] = softplus(s) - y s
                sum += softplus(s) - y * s;
                grad[[i, 0]] = (sigmoid(s) - y) * scale;
            }
            sum * scale
        }
    };
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn features(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_simple_fn((n, d), || rng.random_range(-2.0..2.0))
    }

    #[test]
    fn denoise_limit_and_determinism() {
        let x = features(10, 4, 0);
        let inst = denoise_features(&x, 1e-12, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!((&inst.transformed - &x).iter().all(|d| d.abs() < 1e-5));
        assert_eq!(
            inst.target,
            SslTarget::Denoise {
                original: x.clone()
            }
        );
        let again = denoise_features(&x, 1e-12, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(inst, again);
        assert!(denoise_features(&x, 0.0, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
    }

    #[test]
    fn denoise_noise_moments() {
        let x = Array2::zeros((100, 100));
        let inst = denoise_features(&x, 0.1, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let n = 1e4;
        let mean = inst.transformed.sum() / n;
        let var = inst.transformed.mapv(|v| (v - mean) * (v - mean)).sum() / n;
        assert!(mean.abs() < 3.0 * (0.1f64 / n).sqrt());
        assert!((var - 0.1).abs() / 0.1 < 0.1);
    }

    #[test]
    fn completion_masks_exact_rows() {
        let x = features(53, 6, 3);
        let inst = completion_features(&x, 0.1, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let SslTarget::Completion {
            masked,
            original_rows,
        } = &inst.target
        else {
            panic!("wrong target")
        };
        assert_eq!(masked.len(), 5);
        for i in 0..53 {
            let zero = inst.transformed.row(i).iter().all(|v| *v == 0.0);
            assert_eq!(zero, masked.contains(&i));
        }
        for (k, &i) in masked.iter().enumerate() {
            assert_eq!(original_rows.row(k), x.row(i));
        }
        let all = completion_features(&x, 1.0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert!(all.transformed.iter().all(|v| *v == 0.0));
        assert!(completion_features(&x, 0.0, &mut ChaCha8Rng::seed_from_u64(3)).is_err());
    }

    #[test]
    fn shuffle_labels_count_fixed_points() {
        let x = features(20, 3, 4);
        for seed in 0..50 {
            let inst = shuffle_features(&x, 0.25, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let SslTarget::Shuffle {
                shuffled,
                unchanged,
            } = &inst.target
            else {
                panic!("wrong target")
            };
            assert_eq!(shuffled.len(), 5);
            let fixed = (0..20)
                .filter(|&i| inst.transformed.row(i) == x.row(i))
                .count();
            // rows outside the shuffled set are always fixed points
            let outside = 20 - shuffled.len();
            assert_eq!(unchanged.iter().sum::<f64>() as usize, fixed - outside);
        }
    }

    #[test]
    fn two_row_swap_has_zero_labels() {
        let x = ndarray::array![[1.0, 0.0], [0.0, 1.0]];
        // with two rows the permutation is a swap or identity
        for seed in 0..20 {
            let inst = shuffle_features(&x, 1.0, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let SslTarget::Shuffle { unchanged, .. } = &inst.target else {
                panic!()
            };
            if inst.transformed != x {
                assert_eq!(unchanged, &vec![0.0, 0.0]);
            } else {
                assert_eq!(unchanged, &vec![1.0, 1.0]);
                let loss = ssl_loss(&Array2::from_elem((2, 1), 3.0), &inst).unwrap();
                assert!((loss - softplus(-3.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shuffle_fixed_point_frequency_is_uniform() {
        let x = Array2::from_shape_fn((5, 1), |(i, _)| i as f64);
        let runs = 10_000;
        let mut fixed = [0usize; 5];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..runs {
            let inst = shuffle_features(&x, 1.0, &mut rng).unwrap();
            let SslTarget::Shuffle { unchanged, .. } = &inst.target else {
                panic!()
            };
            for (k, u) in unchanged.iter().enumerate() {
                fixed[k] += *u as usize;
            }
        }
        let sigma = (runs as f64 * 0.2 * 0.8).sqrt();
        for f in fixed {
            assert!((f as f64 - runs as f64 * 0.2).abs() < 3.0 * sigma, "{f}");
        }
    }

    #[test]
    fn perfect_reconstruction_and_zero_logit_losses() {
        let x = features(8, 3, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = denoise_features(&x, 0.1, &mut rng).unwrap();
        assert_eq!(ssl_loss(&x, &d).unwrap(), 0.0);
        let c = completion_features(&x, 0.3, &mut rng).unwrap();
        assert_eq!(ssl_loss(&x, &c).unwrap(), 0.0);
        let s = shuffle_features(&x, 0.5, &mut rng).unwrap();
        let loss = ssl_loss(&Array2::zeros((8, 1)), &s).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(matches!(
            ssl_loss(&Array2::zeros((8, 2)), &s),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn completion_ignores_unmasked_rows() {
        let x = features(10, 3, 7);
        let c = completion_features(&x, 0.3, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let SslTarget::Completion { masked, .. } = &c.target else {
            panic!()
        };
        let pred = features(10, 3, 8);
        let base = ssl_loss(&pred, &c).unwrap();
        let mut moved = pred.clone();
        for i in (0..10).filter(|i| !masked.contains(i)) {
            moved.row_mut(i).fill(99.0);
        }
        assert_eq!(ssl_loss(&moved, &c).unwrap(), base);
    }

    #[test]
    fn denoise_loss_matches_scalar_loop() {
        let x = features(9, 4, 9);
        let d = denoise_features(&x, 0.1, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let pred = features(9, 4, 10);
        let mut sum = 0.0;
        for i in 0..9 {
            for j in 0..4 {
                sum += (pred[[i, j]] - x[[i, j]]).powi(2);
            }
        }
        assert!((ssl_loss(&pred, &d).unwrap() - sum / 9.0).abs() < 1e-12);
    }

    #[test]
    fn identity_predictor_denoise_expectation() {
        // E||noise||^2 / n = D * eps per node
        let (n, d, eps) = (20, 165, 0.1);
        let x = Array2::zeros((n, d));
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut total = 0.0;
        let draws = 1000;
        for _ in 0..draws {
            let inst = denoise_features(&x, eps, &mut rng).unwrap();
            total += ssl_loss(&inst.transformed, &inst).unwrap();
        }
        let mean = total / draws as f64;
        assert!((mean - 16.5).abs() / 16.5 < 0.05, "{mean}");
    }

    #[test]
    fn task_set_parsing() {
        assert_eq!(SslTask::parse_set("none").unwrap(), vec![]);
        assert_eq!(SslTask::parse_set("all").unwrap(), SslTask::ALL.to_vec());
        assert_eq!(
            SslTask::parse_set("shuffle,denoise,shuffle").unwrap(),
            vec![SslTask::Denoise, SslTask::Shuffle]
        );
        assert!(SslTask::parse_set("rotate").is_err());
        assert_eq!(
            SslTask::format_set(&[SslTask::Completion, SslTask::Shuffle]),
            "completion,shuffle"
        );
    }
}
