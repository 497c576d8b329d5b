//! File formats: recordings with JSON sidecars, model files, feature
//! matrices, JSON documents and SVG plots.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub mod features_csv;
pub mod model_file;
pub mod plot;
pub mod recording;

pub use features_csv::{read_feature_csv, write_feature_csv};
pub use model_file::{load_model, model_from_str, model_to_string, save_model, MODEL_MAGIC};
pub use plot::svg_plot;
pub use recording::{load_recording, save_recording, sidecar_path, write_processed};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_json_string<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json_string(value)?)
}
