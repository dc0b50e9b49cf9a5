use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("duplicate sample id {id:?} at row {row}")]
    DuplicateId { row: usize, id: String },
    #[error("label {label} at row {row} is out of range for {class_count} classes")]
    LabelOutOfRange {
        row: usize,
        label: usize,
        class_count: usize,
    },
    #[error("non-finite feature value at row {0}")]
    NonFiniteFeature(usize),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("no candidates left for neighbor query of node {0}")]
    NoCandidates(usize),

    #[error("class {class} has {available} labeled samples, {required} required")]
    InsufficientClassSamples {
        class: usize,
        available: usize,
        required: usize,
    },
    #[error(
        "class {class} has {available} true-labeled samples, {required} required for inference"
    )]
    ClassUnderflow {
        class: usize,
        available: usize,
        required: usize,
    },
    #[error("subgraph would be empty")]
    EmptySubgraph,
    #[error("unlabeled sample {0} has no pseudolabel")]
    MissingPseudolabels(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient in parameter tensor {0}")]
    NonFiniteGradient(String),
    #[error("non-finite loss at epoch {epoch}, step {step}: {detail}")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        detail: String,
    },
    #[error("subgraph has no true-labeled nodes")]
    NoLabeledNodes,

    #[error("empty input")]
    EmptyInput,
    #[error("class {0} has no positive samples")]
    ClassWithoutPositives(usize),
    #[error("all embedding rows are zero")]
    DegenerateEmbeddings,
    #[error("silhouette needs at least two classes")]
    SingleClass,

    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("ragged row at line {line}: expected {expected} features, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("unknown magic bytes {0:?}")]
    UnknownMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    RawIo(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
