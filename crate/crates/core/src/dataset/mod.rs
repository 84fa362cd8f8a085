//! Manifests, STT label mapping, binary conversion and split sampling.
//!
//! A manifest is a JSON-lines file: a header record
//! `{"format":"alemannic-manifest","version":1}` followed by one [`Segment`]
//! per line. Optional fields are omitted when absent.

mod labels;
mod manifest;
mod segment;
mod splits;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use labels::{annotate, binary_of_source, canonical_canton, map_stt_label, source_class_of, to_binary};
pub use manifest::{
    load_manifest, manifest_to_string, read_manifest, write_manifest, MANIFEST_FORMAT, MANIFEST_VERSION,
};
pub use segment::{Corpus, Segment, SourceClass};
pub use splits::{sample_splits, SplitName, SplitSpec, Splits};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("dataset config: {0}")]
    Config(String),
    #[error("segment `{0}` has neither label8 nor source_class")]
    Unlabeled(String),
    #[error("invalid split spec: {0}")]
    InvalidSpec(String),
    #[error("not enough {class} segments for the {split} split: need {needed}, short by {shortfall}")]
    Insufficient {
        class: String,
        split: SplitName,
        needed: usize,
        shortfall: usize,
    },
}

/// Dataset settings, read from TOML.
///
/// ```toml
/// innerschweiz_highest_cantons = ["Uri", "Obwalden", "Nidwalden"]
///
/// [split]
/// task = "binary"
/// train = 400
/// validation = 80
/// test = 80
/// seed = 42
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// STT Innerschweiz cantons lying wholly inside the Highest Alemannic
    /// region; their segments form the Innerschweiz_Highest source class.
    pub innerschweiz_highest_cantons: Vec<String>,
    pub split: SplitSpec,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            innerschweiz_highest_cantons: vec!["Uri".into(), "Obwalden".into(), "Nidwalden".into()],
            split: SplitSpec::default(),
        }
    }
}

impl DatasetConfig {
    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let cfg: DatasetConfig = toml::from_str(text).map_err(|e| DatasetError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if let Some(unknown) = self
            .innerschweiz_highest_cantons
            .iter()
            .find(|c| canonical_canton(c).is_none())
        {
            return Err(DatasetError::Config(format!("unknown canton `{unknown}`")));
        }
        self.split.validate()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_overrides() {
        let cfg = DatasetConfig::parse("").unwrap();
        assert_eq!(cfg, DatasetConfig::default());
        let cfg = DatasetConfig::parse("[split]\ntest = 40\ntask = \"eight\"\ntrain = 8\nvalidation = 8\n").unwrap();
        assert_eq!(cfg.split.test, 40);
        assert_eq!(cfg.split.task, crate::Task::Eight);
        assert!(DatasetConfig::parse("innerschweiz_highest_cantons = [\"Atlantis\"]").is_err());
        assert!(DatasetConfig::parse("colour = 1").is_err());
    }
}
