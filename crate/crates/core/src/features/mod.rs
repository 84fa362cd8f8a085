//! Data-driven isogloss rules scored over alignments.
//!
//! A rule pairs a predicate over Standard German reference phones with a
//! predicate over aligned dialect phones and carries per-class weights.
//! Hits are summed per class and normalized with a softmax.

mod detect;
mod engine;
mod rules;

use crate::prediction::ClassScores;
use crate::Task;

pub use detect::{detect, FeatureHit};
pub use engine::{classify_rules, RuleEngine, SegmentAnalysis};
pub use rules::{FeatureRule, PhonePredicate, RefPattern, RuleSet};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("rule file: {0}")]
    Syntax(String),
    #[error("rule `{rule}`: {message}")]
    InvalidRule { rule: String, message: String },
    #[error("duplicate rule id `{0}`")]
    DuplicateId(String),
    #[error("segment `{0}` lacks an IPA or Standard German transcription")]
    MissingTranscription(String),
}

/// Summed class weights of `hits`, in `task`'s label order. Weights for
/// labels of the other task are ignored.
pub fn summed_weights(hits: &[FeatureHit], task: Task) -> Vec<f64> {
    task.labels()
        .iter()
        .map(|l| hits.iter().filter_map(|h| h.class_weights.get(l)).sum::<f64>())
        .collect()
}

/// Softmax (temperature 1) over the summed class weights. No hits gives the
/// uniform distribution.
pub fn score(hits: &[FeatureHit], task: Task) -> ClassScores {
    let sums = summed_weights(hits, task);
    let max = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = sums.iter().map(|s| (s - max).exp()).collect();
    ClassScores::from_weights(task, &exp).expect("softmax terms are positive and finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Label;

    fn hit(weights: &[(Label, f64)]) -> FeatureHit {
        FeatureHit {
            rule_id: "r".into(),
            start: 0,
            end: 1,
            ref_word: 0,
            orthography: String::new(),
            ref_phone: "a".into(),
            dialect_phones: vec!["a".into()],
            class_weights: weights.iter().copied().collect(),
        }
    }

    #[test]
    fn no_hits_is_uniform() {
        let s = score(&[], Task::Binary);
        assert_eq!(s.probs(), [0.5, 0.5]);
        let s = score(&[], Task::Eight);
        assert!(s.probs().iter().all(|p| (p - 0.125).abs() < 1e-15));
    }

    #[test]
    fn single_highest_hit_raises_highest() {
        let s = score(&[hit(&[(Label::Highest, 1.0)])], Task::Binary);
        assert!(s.get(Label::Highest) > s.get(Label::High));
    }

    #[test]
    fn weights_of_other_task_are_ignored() {
        let s = score(&[hit(&[(Label::Zh, 5.0)])], Task::Binary);
        assert_eq!(s.probs(), [0.5, 0.5]);
    }
}
