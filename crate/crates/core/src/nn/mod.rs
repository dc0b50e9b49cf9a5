//! Dense graph-convolution engine with hand-written reverse mode.

mod adam;
mod adjacency;
mod checkpoint;
mod init;
mod model;

pub use adam::{adam_step, AdamState, DEFAULT_LEARNING_RATE};
pub use adjacency::{normalize_adjacency, NormalizedAdjacency};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use init::init_xavier;
pub use model::{GcnModel, Head, Layer, ModelConfig, ParamSet, TrunkCache, DEFAULT_HIDDEN};
