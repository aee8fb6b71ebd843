//! Versioned model container: shape, feature configuration (which fixes the
//! input column ordering), scaler and all weight matrices in one JSON file.

use super::NetworkWeights;
use crate::feature_space::FeatureConfig;
use crate::market_data::ScalingParams;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use thiserror::Error;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("inconsistent model file: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SavedModel {
    pub version: u32,
    /// Fixes the input ordering: columns are a pure function of the config.
    pub config: FeatureConfig,
    /// True when the network emits both markets (48 outputs).
    pub dual: bool,
    pub scaler: ScalingParams,
    pub weights: NetworkWeights,
}

pub fn save_model(model: &SavedModel, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
    let file = BufWriter::new(File::create(path)?);
    serde_json::to_writer(file, model)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel, ModelIoError> {
    let file = BufReader::new(File::open(path)?);
    let model: SavedModel = serde_json::from_reader(file)?;
    if model.version != MODEL_FORMAT_VERSION {
        return Err(ModelIoError::UnsupportedVersion(model.version));
    }
    let expect_in = crate::feature_space::input_dimension(&model.config)
        .map_err(|e| ModelIoError::Inconsistent(e.to_string()))?;
    if model.weights.shape.n_in != expect_in {
        return Err(ModelIoError::Inconsistent(format!(
            "weights expect {} inputs but the stored config produces {expect_in}",
            model.weights.shape.n_in
        )));
    }
    let expect_out = if model.dual { 48 } else { 24 };
    if model.weights.shape.n_out != expect_out {
        return Err(ModelIoError::Inconsistent(format!(
            "weights emit {} outputs; expected {expect_out}",
            model.weights.shape.n_out
        )));
    }
    Ok(model)
}
