//! Trained models saved as versioned JSON.

use std::path::Path;

use ecsdbn_core::trainer::EcsDbnModel;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, BenchError, Result};
use crate::keel::{Attribute, Dataset};
use crate::split::MinMax;

pub const FORMAT: &str = "ecsdbn-model";
pub const VERSION: u32 = 1;

/// Everything needed to score new KEEL rows: the input schema, the fitted
/// scaling, the label mapping and the model itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format: String,
    pub version: u32,
    pub dataset: String,
    pub inputs: Vec<Attribute>,
    pub class_names: Vec<String>,
    pub minority_class: usize,
    pub scaler: MinMax,
    pub model: EcsDbnModel,
}

impl ModelBundle {
    pub fn new(train: &Dataset, scaler: MinMax, model: EcsDbnModel) -> Self {
        ModelBundle {
            format: FORMAT.into(),
            version: VERSION,
            dataset: train.name.clone(),
            inputs: train.inputs.clone(),
            class_names: train.class_names.clone(),
            minority_class: train.minority_class,
            scaler,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| BenchError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bundle: ModelBundle = serde_json::from_str(&read_to_string(path)?)?;
        if bundle.format != FORMAT || bundle.version != VERSION {
            return Err(BenchError::Config(format!(
                "{}: unsupported model file ({} v{}, expected {FORMAT} v{VERSION})",
                path.display(),
                bundle.format,
                bundle.version
            )));
        }
        Ok(bundle)
    }

    /// Predicted class names for `data`, whose inputs must match the
    /// training schema.
    pub fn predict(&self, data: &Dataset) -> Result<Vec<String>> {
        if data.inputs != self.inputs {
            return Err(BenchError::Config(
                "input attributes differ from the training data".into(),
            ));
        }
        let x = self.scaler.apply(&data.features)?;
        Ok(self
            .model
            .predict(&x)?
            .into_iter()
            .map(|y| self.class_names[y].clone())
            .collect())
    }
}
