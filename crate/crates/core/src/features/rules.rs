use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::alignment::AlignmentUnit;
use crate::ipa::{tokenize, Backness, Category, Height, IpaChart, Manner, Phone, Place};
use crate::{Label, Task};

const STARTER_RULES: &str = include_str!("../../data/rules/starter.toml");

/// Constraints on a single phone. Every present field must hold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhonePredicate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbols: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<Vec<Height>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backness: Option<Vec<Backness>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounded: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place: Option<Vec<Place>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manner: Option<Vec<Manner>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voiced: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub long: Option<bool>,
}

impl PhonePredicate {
    pub fn matches(&self, phone: &Phone) -> bool {
        fn within<T: PartialEq>(allowed: &Option<Vec<T>>, value: Option<T>) -> bool {
            match (allowed, value) {
                (None, _) => true,
                (Some(set), Some(v)) => set.contains(&v),
                (Some(_), None) => false,
            }
        }
        fn equals<T: PartialEq>(wanted: Option<T>, value: Option<T>) -> bool {
            wanted.is_none() || wanted == value
        }
        let vowel = phone.vowel();
        let cons = phone.consonant();
        self.symbols.as_ref().is_none_or(|s| s.contains(&phone.symbol))
            && equals(self.category, Some(phone.category()))
            && within(&self.height, vowel.map(|v| v.height))
            && within(&self.backness, vowel.map(|v| v.backness))
            && equals(self.rounded, vowel.map(|v| v.rounded))
            && within(&self.place, cons.map(|c| c.place))
            && within(&self.manner, cons.map(|c| c.manner))
            && equals(self.voiced, cons.map(|c| c.voiced))
            && equals(self.long, Some(phone.long))
    }

    fn is_empty(&self) -> bool {
        *self == PhonePredicate::default()
    }
}

/// Reference-side predicate: a phone predicate plus optional orthographic
/// context of the reference word the phone belongs to.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefPattern {
    #[serde(flatten)]
    pub phone: PhonePredicate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orth_contains: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orth_suffix: Option<String>,
}

impl RefPattern {
    pub fn matches(&self, unit: &AlignmentUnit, orthography: &str) -> bool {
        let Some(phone) = &unit.ref_phone else {
            return false;
        };
        let orth = orthography.to_lowercase();
        self.phone.matches(phone)
            && self
                .orth_contains
                .as_ref()
                .is_none_or(|s| orth.contains(&s.to_lowercase()))
            && self
                .orth_suffix
                .as_ref()
                .is_none_or(|s| orth.ends_with(&s.to_lowercase()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRule {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub scope: Task,
    pub ref_pattern: RefPattern,
    pub dialect_pattern: PhonePredicate,
    pub weights: BTreeMap<Label, f64>,
}

/// A validated, immutable collection of rules in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleSet {
    rules: Vec<FeatureRule>,
}

// Weights are parsed as strings first so an unknown class can be reported
// against the rule that uses it.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    id: String,
    name: String,
    #[serde(default)]
    description: String,
    scope: Task,
    ref_pattern: RefPattern,
    dialect_pattern: PhonePredicate,
    weights: BTreeMap<String, f64>,
}

impl RuleSet {
    /// The illustrative ruleset shipped with the crate.
    pub fn starter() -> &'static RuleSet {
        static RULES: OnceLock<RuleSet> = OnceLock::new();
        RULES.get_or_init(|| RuleSet::parse(STARTER_RULES).expect("starter ruleset is valid"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FeatureError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| FeatureError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, FeatureError> {
        let table: toml::Table = toml::from_str(text).map_err(|e| FeatureError::Syntax(e.to_string()))?;
        for key in table.keys() {
            if key != "rule" && key != "version" {
                return Err(FeatureError::Syntax(format!("unexpected top-level key `{key}`")));
            }
        }
        let raw_rules = match table.get("rule") {
            None => return Ok(RuleSet::default()),
            Some(toml::Value::Array(items)) => items.clone(),
            Some(_) => return Err(FeatureError::Syntax("`rule` must be an array of tables".into())),
        };
        let chart = IpaChart::bundled();
        let mut seen = HashSet::new();
        let mut rules = Vec::with_capacity(raw_rules.len());
        for (idx, value) in raw_rules.into_iter().enumerate() {
            let name_hint = value
                .get("id")
                .and_then(|v| v.as_str())
                .map(str::to_string)
                .unwrap_or_else(|| format!("#{}", idx + 1));
            let invalid = |message: String| FeatureError::InvalidRule {
                rule: name_hint.clone(),
                message,
            };
            let raw: RawRule = value.try_into().map_err(|e: toml::de::Error| invalid(e.to_string()))?;
            if raw.id.trim().is_empty() {
                return Err(invalid("empty id".into()));
            }
            if !seen.insert(raw.id.clone()) {
                return Err(FeatureError::DuplicateId(raw.id));
            }
            let mut weights = BTreeMap::new();
            for (class, w) in raw.weights {
                let label: Label = class.parse().map_err(|_| invalid(format!("unknown class `{class}`")))?;
                if label.task() != raw.scope {
                    return Err(invalid(format!(
                        "class `{class}` is outside the {} label space",
                        raw.scope
                    )));
                }
                if !w.is_finite() {
                    return Err(invalid(format!("weight for `{class}` is not finite")));
                }
                weights.insert(label, w);
            }
            if !weights.values().any(|&w| w != 0.0) {
                return Err(invalid("needs at least one non-zero weight".into()));
            }
            for pred in [&raw.ref_pattern.phone, &raw.dialect_pattern] {
                for sym in pred.symbols.iter().flatten() {
                    let seq = tokenize(sym, chart);
                    if seq.len() != 1 || seq.phones[0].is_unknown() {
                        return Err(invalid(format!("unknown symbol `{sym}`")));
                    }
                }
            }
            if raw.dialect_pattern.is_empty() {
                return Err(invalid("dialect_pattern has no constraints".into()));
            }
            rules.push(FeatureRule {
                id: raw.id,
                name: raw.name,
                description: raw.description,
                scope: raw.scope,
                ref_pattern: raw.ref_pattern,
                dialect_pattern: raw.dialect_pattern,
                weights,
            });
        }
        Ok(RuleSet { rules })
    }

    pub fn from_rules(rules: Vec<FeatureRule>) -> Result<Self, FeatureError> {
        let mut seen = HashSet::new();
        for r in &rules {
            if !seen.insert(r.id.as_str()) {
                return Err(FeatureError::DuplicateId(r.id.clone()));
            }
        }
        Ok(RuleSet { rules })
    }

    pub fn rules(&self) -> &[FeatureRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&FeatureRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(&self, factor: f64) -> RuleSet {
        let rules = self
            .rules
            .iter()
            .map(|r| FeatureRule {
                weights: r.weights.iter().map(|(&l, &w)| (l, w * factor)).collect(),
                ..r.clone()
            })
            .collect();
        RuleSet { rules }
    }

    /// Plain-text listing of the rules for a task, used as a prompt attachment.
    pub fn describe(&self, task: Task) -> String {
        let mut out = String::new();
        for r in self.rules.iter().filter(|r| r.scope == task) {
            let weights: Vec<String> = r
                .weights
                .iter()
                .map(|(l, w)| format!("{} {w:+.1}", l.display_name()))
                .collect();
            out.push_str(&format!("- {}: {} [{}]\n", r.name, r.description, weights.join(", ")));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_RULE: &str = r#"
[[rule]]
id = "r1"
name = "n"
scope = "binary"
ref_pattern = { symbols = ["s"] }
dialect_pattern = { symbols = ["ʃ"] }
weights = { Highest = 1.0 }
"#;

    #[test]
    fn empty_file_is_empty_ruleset() {
        assert!(RuleSet::parse("").unwrap().is_empty());
        assert!(RuleSet::parse("# nothing\nversion = 1\n").unwrap().is_empty());
    }

    #[test]
    fn duplicate_id_names_the_id() {
        let text = format!("{ONE_RULE}{ONE_RULE}");
        let err = RuleSet::parse(&text).unwrap_err();
        assert!(matches!(&err, FeatureError::DuplicateId(id) if id == "r1"));
        assert!(err.to_string().contains("`r1`"));
    }

    #[test]
    fn unknown_class_names_rule() {
        let text = ONE_RULE.replace("Highest = 1.0", "Lowest = 1.0");
        let err = RuleSet::parse(&text).unwrap_err().to_string();
        assert!(err.contains("r1") && err.contains("Lowest"), "{err}");
        let text = ONE_RULE.replace("Highest = 1.0", "ZH = 1.0");
        let err = RuleSet::parse(&text).unwrap_err().to_string();
        assert!(err.contains("outside the binary label space"), "{err}");
    }

    #[test]
    fn malformed_predicate_names_rule() {
        let text = ONE_RULE.replace("symbols = [\"s\"]", "colour = \"red\"");
        let err = RuleSet::parse(&text).unwrap_err().to_string();
        assert!(err.contains("r1"), "{err}");
        let text = ONE_RULE.replace("[\"ʃ\"]", "[\"₪\"]");
        let err = RuleSet::parse(&text).unwrap_err().to_string();
        assert!(err.contains("r1") && err.contains("unknown symbol"), "{err}");
        let text = ONE_RULE.replace("scope = \"binary\"", "scope = \"ternary\"");
        assert!(RuleSet::parse(&text).unwrap_err().to_string().contains("r1"));
    }

    #[test]
    fn zero_weights_rejected() {
        let text = ONE_RULE.replace("Highest = 1.0", "Highest = 0.0");
        assert!(RuleSet::parse(&text).is_err());
    }

    #[test]
    fn predicate_feature_constraints() {
        let chart = IpaChart::bundled();
        let p = |s: &str| crate::ipa::features_of(s, chart);
        let pred = PhonePredicate {
            category: Some(Category::Vowel),
            backness: Some(vec![Backness::Front]),
            rounded: Some(true),
            ..Default::default()
        };
        assert!(pred.matches(&p("y")));
        assert!(pred.matches(&p("øː")));
        assert!(!pred.matches(&p("i")));
        assert!(!pred.matches(&p("u")));
        assert!(!pred.matches(&p("t")));
        let long = PhonePredicate {
            long: Some(true),
            ..Default::default()
        };
        assert!(long.matches(&p("aː")) && !long.matches(&p("a")));
    }
}
