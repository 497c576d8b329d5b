//! Versioned text model files:
//!
//! ```text
//! REHABKIT-MODEL v1
//! algorithm: random_forest
//! schema: 3f0c...
//! seed: 42
//! n_features: 353
//! ---
//! { ...parameters as JSON... }
//! ```

use std::path::Path;

use super::{read_text, write_text};
use crate::error::{Error, Result};
use crate::learners::Model;

pub const MODEL_MAGIC: &str = "REHABKIT-MODEL";
pub const MODEL_VERSION: &str = "v1";

pub fn model_to_string(model: &Model) -> Result<String> {
    let body = serde_json::to_string_pretty(model)?;
    Ok(format!(
        "{MODEL_MAGIC} {MODEL_VERSION}\nalgorithm: {}\nschema: {}\nseed: {}\nn_features: {}\n---\n{body}\n",
        model.algorithm.as_str(),
        model.schema_hash,
        model.seed,
        model.n_features,
    ))
}

pub fn model_from_str(text: &str) -> Result<Model> {
    let mut lines = text.split_inclusive('\n');
    let first = lines.next().unwrap_or("").trim_end();
    match first.split_once(' ') {
        Some((MODEL_MAGIC, MODEL_VERSION)) => {}
        Some((MODEL_MAGIC, v)) => return Err(Error::ModelVersion(v.to_string())),
        _ => return Err(Error::ModelFormat("missing REHABKIT-MODEL header".into())),
    }
    let mut header = Vec::new();
    let mut offset = first.len() + 1;
    let mut found_separator = false;
    for line in lines.by_ref() {
        offset += line.len();
        let l = line.trim_end();
        if l == "---" {
            found_separator = true;
            break;
        }
        let (k, v) = l
            .split_once(": ")
            .ok_or_else(|| Error::ModelFormat(format!("bad header line {l:?}")))?;
        header.push((k.to_string(), v.to_string()));
    }
    if !found_separator {
        return Err(Error::ModelFormat("truncated header".into()));
    }
    let body = text.get(offset.min(text.len())..).unwrap_or("");
    let model: Model = serde_json::from_str(body)
        .map_err(|e| Error::ModelFormat(format!("parameter block: {e}")))?;
    let expect = [
        ("algorithm", model.algorithm.as_str().to_string()),
        ("schema", model.schema_hash.clone()),
        ("seed", model.seed.to_string()),
        ("n_features", model.n_features.to_string()),
    ];
    for (key, value) in expect {
        match header.iter().find(|(k, _)| k == key) {
            Some((_, v)) if *v == value => {}
            Some((_, v)) => {
                return Err(Error::ModelFormat(format!(
                    "header {key} is {v:?} but the parameter block says {value:?}"
                )))
            }
            None => return Err(Error::ModelFormat(format!("header {key} missing"))),
        }
    }
    Ok(model)
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    write_text(path, &model_to_string(model)?)
}

pub fn load_model(path: &Path) -> Result<Model> {
    model_from_str(&read_text(path)?)
}
