use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RuleSet;
use crate::alignment::Alignment;
use crate::{Label, Task};

/// One place where a rule's correspondence is witnessed by the alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureHit {
    pub rule_id: String,
    /// Half-open unit index range covering the anchor and the matched
    /// dialect phone.
    pub start: usize,
    pub end: usize,
    pub ref_word: usize,
    pub orthography: String,
    pub ref_phone: String,
    pub dialect_phones: Vec<String>,
    pub class_weights: BTreeMap<Label, f64>,
}

/// Finds every rule of `task`'s scope witnessed by `alignment`.
///
/// A unit whose reference phone matches a rule's `ref_pattern` anchors a
/// window of itself and its neighbours in the same reference word. The rule
/// fires once per anchor if any dialect phone in the window matches
/// `dialect_pattern`; the anchor's own phone is tried first, then the left
/// neighbour, then the right. Hits are ordered by position, then rule order.
pub fn detect(alignment: &Alignment, rules: &RuleSet, task: Task) -> Vec<FeatureHit> {
    let units = &alignment.units;
    let mut hits = Vec::new();
    for (i, anchor) in units.iter().enumerate() {
        let Some(ref_phone) = &anchor.ref_phone else {
            continue;
        };
        let word = anchor.ref_word;
        let orth = alignment.words.get(word).map(String::as_str).unwrap_or("");
        let mut window = vec![i];
        if i > 0 && units[i - 1].ref_word == word {
            window.push(i - 1);
        }
        if i + 1 < units.len() && units[i + 1].ref_word == word {
            window.push(i + 1);
        }
        for rule in rules.rules().iter().filter(|r| r.scope == task) {
            if !rule.ref_pattern.matches(anchor, orth) {
                continue;
            }
            let matched = window.iter().copied().find(|&k| {
                units[k]
                    .dialect_phone
                    .as_ref()
                    .is_some_and(|p| rule.dialect_pattern.matches(p))
            });
            if let Some(k) = matched {
                hits.push(FeatureHit {
                    rule_id: rule.id.clone(),
                    start: i.min(k),
                    end: i.max(k) + 1,
                    ref_word: word,
                    orthography: orth.to_string(),
                    ref_phone: ref_phone.symbol.clone(),
                    dialect_phones: vec![units[k].dialect_phone.as_ref().unwrap().symbol.clone()],
                    class_weights: rule.weights.clone(),
                });
            }
        }
    }
    // Stable: rule order is kept among hits sharing a start.
    hits.sort_by_key(|h| (h.start, h.end));
    hits
}
