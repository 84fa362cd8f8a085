use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Label, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Corpus {
    SwissDial,
    #[serde(rename = "STT")]
    Stt,
}

/// Origin class inside a binary label; balanced within each class when
/// sampling binary splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SourceClass {
    Aargau,
    Lucerne,
    #[serde(rename = "Zürich")]
    Zurich,
    Valais,
    #[serde(rename = "Innerschweiz_Highest")]
    InnerschweizHighest,
}

impl SourceClass {
    pub const ALL: [SourceClass; 5] = [
        SourceClass::Aargau,
        SourceClass::Lucerne,
        SourceClass::Zurich,
        SourceClass::Valais,
        SourceClass::InnerschweizHighest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceClass::Aargau => "Aargau",
            SourceClass::Lucerne => "Lucerne",
            SourceClass::Zurich => "Zürich",
            SourceClass::Valais => "Valais",
            SourceClass::InnerschweizHighest => "Innerschweiz_Highest",
        }
    }

    /// The eight-class label this source corresponds to, if any.
    pub fn label8(self) -> Option<Label> {
        match self {
            SourceClass::Aargau => Some(Label::Ag),
            SourceClass::Lucerne => Some(Label::Lu),
            SourceClass::Zurich => Some(Label::Zh),
            SourceClass::Valais => Some(Label::Vs),
            SourceClass::InnerschweizHighest => None,
        }
    }

    pub fn from_label8(label: Label) -> Option<SourceClass> {
        match label {
            Label::Ag => Some(SourceClass::Aargau),
            Label::Lu => Some(SourceClass::Lucerne),
            Label::Zh => Some(SourceClass::Zurich),
            Label::Vs => Some(SourceClass::Valais),
            _ => None,
        }
    }
}

impl fmt::Display for SourceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SourceClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()) || (s.trim() == "Zurich" && *c == SourceClass::Zurich))
            .ok_or_else(|| format!("unknown source class `{s}`"))
    }
}

/// One utterance with its transcriptions and corpus metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub id: String,
    pub corpus: Corpus,
    /// Identity of the source sentence in a parallel corpus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_id: Option<String>,
    /// Opaque; audio is never decoded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_path: Option<String>,
    pub ipa_transcription: String,
    pub standard_german: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canton: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stt_region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label8: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_class: Option<SourceClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label2: Option<Label>,
}

impl Segment {
    /// Checks the field-level invariants.
    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if let Some(l) = self.label8 {
            if l.task() != Task::Eight {
                return Err(format!("label8 `{l}` is not an eight-class label"));
            }
        }
        if let Some(l) = self.label2 {
            if l.task() != Task::Binary {
                return Err(format!("label2 `{l}` is not a binary label"));
            }
        }
        if self.corpus == Corpus::SwissDial && self.sentence_id.is_none() {
            return Err("SwissDial segment without sentence_id".into());
        }
        Ok(())
    }

    /// True when both transcriptions are non-blank.
    pub fn has_transcriptions(&self) -> bool {
        !self.ipa_transcription.trim().is_empty() && !self.standard_german.trim().is_empty()
    }

    /// Gold label for `task`: `label2` / `label8` as stored.
    pub fn gold(&self, task: Task) -> Option<Label> {
        match task {
            Task::Binary => self.label2,
            Task::Eight => self.label8,
        }
    }
}
