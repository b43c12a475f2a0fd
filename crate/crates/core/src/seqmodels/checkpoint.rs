use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{build_model, Architecture, Model, ModelSpec};
use crate::embeddings::EmbeddingTable;
use crate::nncore::{read_checkpoint, write_checkpoint};
use crate::{Error, Result};

pub const SIDECAR_VERSION: u32 = 1;

/// JSON description stored next to the binary parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSidecar {
    pub version: u32,
    pub architecture: Architecture,
    pub spec: ModelSpec,
    pub vocab_hash: String,
    pub embedding_hash: String,
    pub class_names: Vec<String>,
}

pub fn save_checkpoint(model: &Model, class_names: &[String], weights: impl AsRef<Path>, sidecar: impl AsRef<Path>) -> Result<()> {
    if class_names.len() != model.num_classes() {
        return Err(Error::invalid(format!(
            "{} class names for a {}-class model",
            class_names.len(),
            model.num_classes()
        )));
    }
    let params = model.parameters();
    write_checkpoint(weights, params.iter().map(|p| (p.name.as_str(), &p.value)))?;
    let meta = ModelSidecar {
        version: SIDECAR_VERSION,
        architecture: model.spec().architecture,
        spec: model.spec().clone(),
        vocab_hash: model.vocab_hash().to_string(),
        embedding_hash: model.embedding_hash().to_string(),
        class_names: class_names.to_vec(),
    };
    let path = sidecar.as_ref();
    std::fs::write(path, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(weights: impl AsRef<Path>, sidecar: impl AsRef<Path>) -> Result<(Model, ModelSidecar)> {
    let path = sidecar.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let meta: ModelSidecar = serde_json::from_str(&text)?;
    if meta.version != SIDECAR_VERSION {
        return Err(Error::Format(format!("unsupported sidecar version {}", meta.version)));
    }
    if meta.architecture != meta.spec.architecture {
        return Err(Error::Format("sidecar architecture disagrees with its spec".into()));
    }
    let tensors = read_checkpoint(weights)?;
    let embedding = tensors
        .iter()
        .find(|(n, _)| n == "embedding")
        .map(|(_, t)| t.clone())
        .ok_or_else(|| Error::Format("checkpoint lacks the embedding table".into()))?;
    let table = EmbeddingTable::new(embedding, meta.vocab_hash.clone())?;
    let mut model = build_model(&meta.spec, &table, 0)?;
    model.load_parameters(tensors)?;
    model.set_embedding_hash(meta.embedding_hash.clone());
    Ok((model, meta))
}
