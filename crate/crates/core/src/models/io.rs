//! Portable model files.
//!
//! Models are stored as JSON text:
//!
//! ```text
//! {
//!   "format": "semg-meet-model",
//!   "version": 1,
//!   "kind": "meet",
//!   "class_names": ["TE", "ME", ...],
//!   "model": { "type": "meet", "plan": {...}, "experts": [...], "gate": {...} }
//! }
//! ```
//!
//! Trees are node arrays (`{"kind": "split", "feature", "threshold", "left",
//! "right"}` or `{"kind": "leaf", "posterior"}`) indexed from the root at 0.
//! Floats are written in shortest round-trip form, so a load after a save
//! reproduces every parameter bit for bit.

use serde::{Deserialize, Serialize};

use super::{Classifier, Model, ModelError, ModelKind};

pub const MODEL_FORMAT: &str = "semg-meet-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub class_names: Vec<String>,
    pub model: Model,
}

impl ModelFile {
    pub fn new(kind: ModelKind, class_names: Vec<String>, model: Model) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            kind,
            class_names,
            model,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("models serialize");
        s.push('\n');
        s
    }

    /// Parses and structurally validates a model file.
    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| ModelError::Corrupt(format!("model file: {e}")))?;
        if file.format != MODEL_FORMAT {
            return Err(ModelError::Corrupt(format!(
                "unexpected format tag '{}'",
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(ModelError::Corrupt(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        file.model.validate()?;
        if file.class_names.len() != file.model.class_count() {
            return Err(ModelError::Corrupt(format!(
                "{} class names for a {}-class model",
                file.class_names.len(),
                file.model.class_count()
            )));
        }
        Ok(file)
    }
}
