//! Versioned model files: the fitted model plus everything needed to encode
//! new rows the same way.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Encoder, FeatureSchema};
use crate::error::{Error, Result};
use crate::models::{ModelKind, TrainedModel};
use crate::pipeline::PipelineConfig;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    /// Fingerprint of the raw input schema the model was trained on.
    pub schema_fingerprint: u64,
    pub pipeline: PipelineConfig,
    pub encoder: Encoder,
    pub model: TrainedModel,
}

impl ModelArtifact {
    pub fn new(schema: &FeatureSchema, pipeline: PipelineConfig, encoder: Encoder, model: TrainedModel) -> Self {
        ModelArtifact {
            format_version: FORMAT_VERSION,
            schema_fingerprint: schema.fingerprint(),
            pipeline,
            encoder,
            model,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<()> {
        if schema.fingerprint() != self.schema_fingerprint {
            return Err(Error::Artifact(format!(
                "schema fingerprint {:016x} does not match the model's {:016x}",
                schema.fingerprint(),
                self.schema_fingerprint
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format_version: u32,
        }
        let header: Header =
            serde_json::from_str(text).map_err(|e| Error::Artifact(format!("not a model artifact: {e}")))?;
        if header.format_version != FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "format version {} is not supported (expected {FORMAT_VERSION})",
                header.format_version
            )));
        }
        serde_json::from_str(text).map_err(|e| Error::Artifact(format!("malformed artifact: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
