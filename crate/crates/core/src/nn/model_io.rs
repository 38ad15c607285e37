//! Model JSON: `{"spec": NetworkSpec, "weights": [f64, ...]}`.
//!
//! Weights are written as shortest round-trip decimals and parsed back with
//! correct rounding, so every `f64` (and every widened `f32`) survives a
//! save/load cycle bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::network::NetworkOf;
use crate::nn::spec::NetworkSpec;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub spec: NetworkSpec,
    pub weights: Vec<f64>,
}

pub fn model_to_json<T: Scalar>(net: &NetworkOf<T>) -> String {
    let file = ModelFile {
        spec: net.spec().clone(),
        weights: net.weights().iter().map(|w| w.as_f64()).collect(),
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

pub fn model_from_json<T: Scalar>(json: &str) -> Result<NetworkOf<T>> {
    let file: ModelFile = serde_json::from_str(json).map_err(|source| Error::Json {
        path: "<model>".into(),
        source,
    })?;
    NetworkOf::with_weights(file.spec, file.weights.into_iter().map(T::of).collect())
}

pub fn save_model<T: Scalar>(net: &NetworkOf<T>, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(net)).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<NetworkOf<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    NetworkOf::with_weights(file.spec, file.weights.into_iter().map(T::of).collect())
}
