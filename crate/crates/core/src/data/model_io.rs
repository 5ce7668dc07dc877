//! Versioned JSON container for trained models.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::elm::ElmModel;
use crate::error::{Error, Result};
use crate::pipeline::VerificationFramework;
use crate::selm::SelmModel;
use crate::triplet::EmbedderRegistry;
use crate::tuning::PairModel;
use crate::welm::WelmModel;

pub const MODEL_FORMAT_VERSION: u64 = 1;

/// Everything that can be saved as a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_kind", content = "body", rename_all = "snake_case")]
pub enum Model {
    Elm(ElmModel),
    Welm(WelmModel),
    Selm(SelmModel),
    /// Any pair verifier, including concatenation baselines.
    Pair(PairModel),
    Registry(EmbedderRegistry),
    Framework(VerificationFramework),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Elm(_) => "elm",
            Model::Welm(_) => "welm",
            Model::Selm(_) => "selm",
            Model::Pair(_) => "pair",
            Model::Registry(_) => "registry",
            Model::Framework(_) => "framework",
        }
    }
}

/// `{"format_version": 1, "model_kind": ..., "body": ...}`, version first.
pub fn model_to_string(model: &Model) -> Result<String> {
    let tagged = serde_json::to_value(model).map_err(|e| Error::Format(e.to_string()))?;
    let doc = json!({
        "format_version": MODEL_FORMAT_VERSION,
        "model_kind": tagged["model_kind"],
        "body": tagged["body"],
    });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_str(text: &str) -> Result<Model> {
    let mut doc: Value = serde_json::from_str(text).map_err(|e| {
        if e.is_eof() {
            Error::Truncated(e.to_string())
        } else {
            Error::Format(e.to_string())
        }
    })?;
    let obj = doc.as_object_mut().ok_or_else(|| Error::Format("top level is not an object".into()))?;
    let version = obj
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Format("missing format_version".into()))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::Version { found: version, supported: MODEL_FORMAT_VERSION });
    }
    obj.remove("format_version");
    serde_json::from_value(doc).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_string(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    model_from_str(&fs::read_to_string(path)?)
}
