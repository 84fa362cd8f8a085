use std::collections::BTreeMap;
use std::fmt;

use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Label, Task};

// Scores within this distance of the maximum count as tied.
const TIE_EPSILON: f64 = 1e-12;

/// A probability distribution over one task's label space, stored in the
/// task's fixed label order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    task: Task,
    probs: Vec<f64>,
}

impl ClassScores {
    pub fn uniform(task: Task) -> Self {
        let n = task.class_count();
        ClassScores {
            task,
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Normalizes non-negative weights given in label order. An all-zero
    /// vector becomes uniform; a vector already summing to 1 (within 1e-9)
    /// is kept unchanged.
    pub fn from_weights(task: Task, weights: &[f64]) -> Result<Self, String> {
        if weights.len() != task.class_count() {
            return Err(format!(
                "expected {} scores for the {task} task, got {}",
                task.class_count(),
                weights.len()
            ));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err("scores must be finite and non-negative".into());
        }
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            return Ok(ClassScores::uniform(task));
        }
        // Already normalized values are kept bit-for-bit.
        if (total - 1.0).abs() <= 1e-9 {
            return Ok(ClassScores {
                task,
                probs: weights.to_vec(),
            });
        }
        Ok(ClassScores {
            task,
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    /// Normalizes a partial label → weight map; missing labels count as 0.
    pub fn from_map(task: Task, map: &BTreeMap<Label, f64>) -> Result<Self, String> {
        if let Some(l) = map.keys().find(|l| l.task() != task) {
            return Err(format!("label `{l}` is outside the {task} label space"));
        }
        let weights: Vec<f64> = task
            .labels()
            .iter()
            .map(|l| map.get(l).copied().unwrap_or(0.0))
            .collect();
        Self::from_weights(task, &weights)
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, label: Label) -> f64 {
        self.task.index_of(label).map_or(0.0, |i| self.probs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Label, f64)> + '_ {
        self.task.labels().iter().copied().zip(self.probs.iter().copied())
    }

    /// Highest-scoring label, first in label order on ties, plus whether
    /// another label tied with it.
    pub fn argmax(&self) -> (Label, bool) {
        let max = self.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut tied = self
            .iter()
            .filter(|(_, p)| (max - p).abs() <= TIE_EPSILON)
            .map(|(l, _)| l);
        let first = tied.next().expect("label space is non-empty");
        (first, tied.next().is_some())
    }
}

impl Serialize for ClassScores {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.probs.len()))?;
        for (label, p) in self.iter() {
            map.serialize_entry(label.code(), &p)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for ClassScores {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<Label, f64>::deserialize(d)?;
        let task = raw
            .keys()
            .next()
            .map(|l| l.task())
            .ok_or_else(|| D::Error::custom("empty class scores"))?;
        let scores = ClassScores::from_map(task, &raw).map_err(D::Error::custom)?;
        if raw.len() != task.class_count() {
            return Err(D::Error::custom(format!("class scores must cover all {task} labels")));
        }
        Ok(scores)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionSource {
    Baseline,
    Agent,
    Rules,
    Human,
}

impl fmt::Display for PredictionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PredictionSource::Baseline => "baseline",
            PredictionSource::Agent => "agent",
            PredictionSource::Rules => "rules",
            PredictionSource::Human => "human",
        })
    }
}

/// The scored output for one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub segment_id: String,
    pub task: Task,
    /// `None` only for an abstention.
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_scores: Option<ClassScores>,
    #[serde(default)]
    pub abstained: bool,
    /// Set when the label was picked by label order among equal scores.
    #[serde(default)]
    pub tie: bool,
    #[serde(default)]
    pub run_id: String,
    pub source: PredictionSource,
}

impl Prediction {
    pub fn validate(&self) -> Result<(), String> {
        match (self.label, self.abstained) {
            (Some(l), false) if l.task() == self.task => {}
            (Some(l), false) => return Err(format!("label `{l}` is outside the {} label space", self.task)),
            (None, true) if self.source == PredictionSource::Human => {}
            (None, true) => return Err(format!("only human predictions may abstain, not {}", self.source)),
            (Some(_), true) => return Err("abstained prediction carries a label".into()),
            (None, false) => return Err("prediction has no label".into()),
        }
        if let Some(s) = &self.class_scores {
            if s.task() != self.task {
                return Err("class scores belong to another task".into());
            }
        }
        Ok(())
    }
}

/// One line of a prediction file: either a prediction or the error that
/// prevented one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub segment_id: String,
    pub task: Task,
    pub source: PredictionSource,
    #[serde(default)]
    pub run_id: String,
    #[serde(default)]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<ClassScores>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tie: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub abstained: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl PredictionRecord {
    pub fn failed(
        segment_id: impl Into<String>,
        task: Task,
        source: PredictionSource,
        run_id: impl Into<String>,
        error: impl fmt::Display,
    ) -> Self {
        PredictionRecord {
            segment_id: segment_id.into(),
            task,
            source,
            run_id: run_id.into(),
            label: None,
            scores: None,
            tie: false,
            abstained: false,
            error: Some(error.to_string()),
        }
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    /// The prediction, unless this record is an error.
    pub fn prediction(&self) -> Option<Prediction> {
        if self.error.is_some() {
            return None;
        }
        Some(Prediction {
            segment_id: self.segment_id.clone(),
            task: self.task,
            label: self.label,
            class_scores: self.scores.clone(),
            abstained: self.abstained,
            tie: self.tie,
            run_id: self.run_id.clone(),
            source: self.source,
        })
    }
}

impl From<Prediction> for PredictionRecord {
    fn from(p: Prediction) -> Self {
        PredictionRecord {
            segment_id: p.segment_id,
            task: p.task,
            source: p.source,
            run_id: p.run_id,
            label: p.label,
            scores: p.class_scores,
            tie: p.tie,
            abstained: p.abstained,
            error: None,
        }
    }
}

/// Serializes records as JSON lines.
pub fn records_to_jsonl(records: &[PredictionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Parses JSON-lines prediction records; blank lines are skipped and errors
/// carry the 1-based line number.
pub fn records_from_jsonl(text: &str) -> Result<Vec<PredictionRecord>, (usize, String)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e.to_string())))
        .collect()
}
