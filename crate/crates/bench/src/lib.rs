//! Dataset ingestion, seeded recognition experiments and result output.

pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod output;
pub mod pgm;
pub mod split;

use reptensor::synthetic::{generate, SyntheticConfig};

/// The synthetic confusable-class dataset as an image dataset.
pub fn synthetic_dataset(cfg: &SyntheticConfig) -> error::Result<dataset::ImageDataset> {
    dataset::ImageDataset::from_matrices(format!("synthetic-{}", cfg.seed), &generate(cfg)?)
}
