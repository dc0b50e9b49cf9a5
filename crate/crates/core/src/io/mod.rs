//! File formats, configuration and synthetic data.

pub mod config;
pub mod dataset_file;
pub mod output;
pub mod synth;

pub use config::RunConfig;
pub use dataset_file::{parse_binary, parse_csv, read_dataset, to_binary, to_csv, write_dataset};
pub use synth::{generate_split, generate_synthetic, SyntheticSpec};
