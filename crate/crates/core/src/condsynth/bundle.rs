use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{train_cond, CondModel, TrainConfig};
use super::template::Template;
use super::{CondError, CorpusRecord, SynthConfig};

pub const BUNDLE_FORMAT: &str = "progest-bundle";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary {
    pub items: usize,
    pub steps: usize,
    pub positives: usize,
    pub negatives: usize,
    pub skipped: usize,
}

/// Everything needed to predict: templates, fitted models, and the
/// configuration they were trained with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub format: String,
    pub version: u32,
    pub corpus_sha256: String,
    pub train: TrainConfig,
    pub synth: SynthConfig,
    pub audit: AuditSummary,
    pub templates: Vec<Template>,
    pub model: CondModel,
}

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("not a bundle: {0}")]
    NotJson(String),
    #[error("not a bundle: format field is {0:?}, expected {BUNDLE_FORMAT:?}")]
    Format(Option<String>),
    #[error("bundle version {found:?} is not supported (this build reads version {BUNDLE_VERSION})")]
    Version { found: Option<u64> },
    #[error("bundle version {BUNDLE_VERSION} is corrupt: {0}")]
    Corrupt(String),
}

impl Bundle {
    pub fn train(
        records: &[CorpusRecord],
        corpus_sha256: String,
        train: TrainConfig,
        synth: SynthConfig,
    ) -> Result<Bundle, CondError> {
        let t = train_cond(records, &train)?;
        Ok(Bundle {
            format: BUNDLE_FORMAT.into(),
            version: BUNDLE_VERSION,
            corpus_sha256,
            train,
            synth,
            audit: AuditSummary {
                items: t.audit.items,
                steps: t.audit.steps,
                positives: t.audit.positives,
                negatives: t.audit.negatives,
                skipped: t.warnings.len(),
            },
            templates: t.templates,
            model: t.model,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundles serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Bundle, BundleError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| BundleError::NotJson(e.to_string()))?;
        let format = v.get("format").and_then(|f| f.as_str());
        if format != Some(BUNDLE_FORMAT) {
            return Err(BundleError::Format(format.map(str::to_string)));
        }
        let version = v.get("version").and_then(|f| f.as_u64());
        if version != Some(BUNDLE_VERSION as u64) {
            return Err(BundleError::Version { found: version });
        }
        serde_json::from_value(v).map_err(|e| BundleError::Corrupt(e.to_string()))
    }
}
