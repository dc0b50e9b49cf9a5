//! Semi-supervised classification of feature vectors over small signed
//! k-NN subgraphs, trained jointly with self-supervised auxiliary tasks.
//!
//! The usual flow is [`io::read_dataset`] or [`io::generate_synthetic`],
//! then [`pipeline::Pipeline::fit`], then [`pipeline::Pipeline::predict`].
//! The lower layers ([`builder`], [`nn`], [`ssl`], [`trainer`],
//! [`inference`], [`eval`]) are public for experiments.

pub mod builder;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod inference;
pub mod io;
pub mod knn;
pub mod nn;
pub mod pipeline;
pub mod seed;
pub mod ssl;
pub mod trainer;

pub use builder::{min_test_edges, EpochSampler, SubgraphConfig};
pub use dataset::{FeatureDataset, Standardizer};
pub use error::{Error, Result};
pub use graph::{Provenance, PseudolabelStore, SignedGraph, SubgraphBatch};
pub use inference::{InferenceConfig, Prediction};
pub use knn::{DistanceMatrix, Metric};
pub use nn::{Checkpoint, GcnModel};
pub use pipeline::{Pipeline, RunSettings};
pub use ssl::SslTask;
pub use trainer::{GraphMode, TrainConfig, TrainReport};
