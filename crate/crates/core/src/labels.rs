//! Label spaces shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Which classification problem a run addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// High vs. Highest Alemannic.
    Binary,
    /// The eight SwissDial dialects.
    Eight,
}

const BINARY_LABELS: [Label; 2] = [Label::High, Label::Highest];
const EIGHT_LABELS: [Label; 8] = [
    Label::Ag,
    Label::Be,
    Label::Bs,
    Label::Gr,
    Label::Lu,
    Label::Sg,
    Label::Vs,
    Label::Zh,
];

impl Task {
    /// Labels of this task in their fixed order. The order doubles as the
    /// tie-break order everywhere a tie can occur.
    pub fn labels(self) -> &'static [Label] {
        match self {
            Task::Binary => &BINARY_LABELS,
            Task::Eight => &EIGHT_LABELS,
        }
    }

    pub fn class_count(self) -> usize {
        self.labels().len()
    }

    pub fn index_of(self, label: Label) -> Option<usize> {
        self.labels().iter().position(|&l| l == label)
    }

    pub fn contains(self, label: Label) -> bool {
        self.index_of(label).is_some()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Binary => "binary",
            Task::Eight => "eight",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "binary" | "2" | "two" => Ok(Task::Binary),
            "eight" | "8" => Ok(Task::Eight),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}

/// A class in either label space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    High,
    Highest,
    Ag,
    Be,
    Bs,
    Gr,
    Lu,
    Sg,
    Vs,
    Zh,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label `{0}`")]
pub struct UnknownLabel(pub String);

impl Label {
    pub fn task(self) -> Task {
        match self {
            Label::High | Label::Highest => Task::Binary,
            _ => Task::Eight,
        }
    }

    /// Stable machine identifier used in files: `High`, `Highest`, `AG` … `ZH`.
    pub fn code(self) -> &'static str {
        match self {
            Label::High => "High",
            Label::Highest => "Highest",
            Label::Ag => "AG",
            Label::Be => "BE",
            Label::Bs => "BS",
            Label::Gr => "GR",
            Label::Lu => "LU",
            Label::Sg => "SG",
            Label::Vs => "VS",
            Label::Zh => "ZH",
        }
    }

    /// Human-readable class name.
    pub fn display_name(self) -> &'static str {
        match self {
            Label::High => "High Alemannic",
            Label::Highest => "Highest Alemannic",
            Label::Ag => "Aargau",
            Label::Be => "Bern",
            Label::Bs => "Basel",
            Label::Gr => "Grisons/Graubünden",
            Label::Lu => "Lucerne/Luzern",
            Label::Sg => "St. Gallen",
            Label::Vs => "Valais/Wallis",
            Label::Zh => "Zürich",
        }
    }

    /// The form a model is asked to reply with: the class name for the binary
    /// task, the lowercase two-letter code for the eight-class task.
    pub fn reply_form(self) -> String {
        match self.task() {
            Task::Binary => self.display_name().to_string(),
            Task::Eight => self.code().to_ascii_lowercase(),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Label {
    type Err = UnknownLabel;

    /// Accepts codes and display names, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_lowercase();
        let label = match norm.as_str() {
            "high" | "high alemannic" => Label::High,
            "highest" | "highest alemannic" => Label::Highest,
            "ag" | "aargau" => Label::Ag,
            "be" | "bern" | "berne" => Label::Be,
            "bs" | "basel" => Label::Bs,
            "gr" | "grisons" | "graubünden" | "grisons/graubünden" => Label::Gr,
            "lu" | "lucerne" | "luzern" | "lucerne/luzern" => Label::Lu,
            "sg" | "st. gallen" | "st.gallen" | "st gallen" => Label::Sg,
            "vs" | "valais" | "wallis" | "valais/wallis" => Label::Vs,
            "zh" | "zürich" | "zurich" => Label::Zh,
            _ => return Err(UnknownLabel(s.to_string())),
        };
        Ok(label)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_order_is_alphabetical_by_code() {
        for task in [Task::Binary, Task::Eight] {
            let codes: Vec<_> = task.labels().iter().map(|l| l.code()).collect();
            let mut sorted = codes.clone();
            sorted.sort();
            assert_eq!(codes, sorted);
        }
    }

    #[test]
    fn code_and_display_name_parse_back() {
        for task in [Task::Binary, Task::Eight] {
            for &label in task.labels() {
                assert_eq!(label.code().parse::<Label>().unwrap(), label);
                assert_eq!(label.display_name().parse::<Label>().unwrap(), label);
                assert_eq!(label.task(), task);
            }
        }
    }

    #[test]
    fn serde_uses_codes() {
        let json = serde_json::to_string(&[Label::Highest, Label::Zh]).unwrap();
        assert_eq!(json, r#"["Highest","ZH"]"#);
        let back: Vec<Label> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![Label::Highest, Label::Zh]);
    }
}
