use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::AlignmentError;
use crate::ipa::{tokenize, IpaChart, PhoneSequence};

const BUNDLED_RULES: &str = include_str!("../../data/german_g2p.tsv");

const VOWEL_LETTERS: &[char] = &['a', 'e', 'i', 'o', 'u', 'ä', 'ö', 'ü', 'y'];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ContextToken {
    Edge,
    Vowel,
    Consonant,
    Letter(char),
}

impl ContextToken {
    fn matches(self, c: Option<char>) -> bool {
        match (self, c) {
            (ContextToken::Edge, None) => true,
            (ContextToken::Vowel, Some(c)) => is_vowel_letter(c),
            (ContextToken::Consonant, Some(c)) => c.is_alphabetic() && !is_vowel_letter(c),
            (ContextToken::Letter(l), Some(c)) => l == c,
            _ => false,
        }
    }
}

fn is_vowel_letter(c: char) -> bool {
    VOWEL_LETTERS.contains(&c)
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct RewriteRule {
    pattern: Vec<char>,
    left: Vec<ContextToken>,
    right: Vec<ContextToken>,
    output: String,
}

impl RewriteRule {
    fn applies_at(&self, word: &[char], pos: usize) -> bool {
        let end = pos + self.pattern.len();
        if end > word.len() || word[pos..end] != self.pattern[..] {
            return false;
        }
        // Left context is read backwards from the character before `pos`.
        let left_ok = self.left.iter().rev().enumerate().all(|(k, tok)| {
            let at = pos.checked_sub(k + 1).map(|i| word[i]);
            tok.matches(at)
        });
        let right_ok = self
            .right
            .iter()
            .enumerate()
            .all(|(k, tok)| tok.matches(word.get(end + k).copied()));
        left_ok && right_ok
    }
}

/// Ordered German grapheme-to-phone rewrite rules (`data/german_g2p.tsv`).
#[derive(Debug, Clone)]
pub struct GermanG2p {
    rules: Vec<RewriteRule>,
    chart: IpaChart,
}

fn parse_context(text: &str) -> Result<(Vec<ContextToken>, Vec<ContextToken>), String> {
    if text == "*" {
        return Ok((Vec::new(), Vec::new()));
    }
    let (left, right) = text
        .split_once('_')
        .ok_or_else(|| format!("context `{text}` lacks `_`"))?;
    let tokens = |side: &str| -> Result<Vec<ContextToken>, String> {
        side.chars()
            .map(|c| match c {
                '#' => Ok(ContextToken::Edge),
                'V' => Ok(ContextToken::Vowel),
                'C' => Ok(ContextToken::Consonant),
                c if c.is_lowercase() => Ok(ContextToken::Letter(c)),
                c => Err(format!("bad context token `{c}`")),
            })
            .collect()
    };
    Ok((tokens(left)?, tokens(right)?))
}

impl GermanG2p {
    /// The rule table shipped with the crate.
    pub fn bundled() -> &'static GermanG2p {
        static G2P: OnceLock<GermanG2p> = OnceLock::new();
        G2P.get_or_init(|| {
            GermanG2p::parse(BUNDLED_RULES, IpaChart::bundled().clone()).expect("bundled G2P table is valid")
        })
    }

    pub fn parse(text: &str, chart: IpaChart) -> Result<Self, AlignmentError> {
        let mut rules = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| AlignmentError::G2pTable { line: idx + 1, message };
            let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
            let [pattern, context, output] = fields[..] else {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            };
            if pattern.is_empty() || pattern.chars().any(|c| !c.is_lowercase()) {
                return Err(err(format!("pattern `{pattern}` must be lowercase letters")));
            }
            let (left, right) = parse_context(context).map_err(err)?;
            let output = if output == "-" {
                String::new()
            } else {
                output.to_string()
            };
            if let Some(bad) = tokenize(&output, &chart).iter().find(|p| p.is_unknown()) {
                return Err(err(format!("output symbol `{}` not in chart", bad.symbol)));
            }
            rules.push(RewriteRule {
                pattern: pattern.chars().collect(),
                left,
                right,
                output,
            });
        }
        Ok(GermanG2p { rules, chart })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// IPA string for one word. Characters no rule covers are skipped.
    pub fn transcribe(&self, word: &str) -> String {
        let chars: Vec<char> = word.to_lowercase().chars().collect();
        let mut out = String::new();
        let mut pos = 0;
        while pos < chars.len() {
            let best = self
                .rules
                .iter()
                .filter(|r| r.applies_at(&chars, pos))
                .fold(None::<&RewriteRule>, |best, r| match best {
                    Some(b) if b.pattern.len() >= r.pattern.len() => Some(b),
                    _ => Some(r),
                });
            match best {
                Some(rule) => {
                    out.push_str(&rule.output);
                    pos += rule.pattern.len();
                }
                None => {
                    log::debug!("no G2P rule for {:?} in {word:?}", chars[pos]);
                    pos += 1;
                }
            }
        }
        out
    }

    /// Citation phones for one Standard German word.
    pub fn phones(&self, word: &str) -> PhoneSequence {
        tokenize(&self.transcribe(word), &self.chart)
    }
}

/// Approximate citation pronunciation of a Standard German word under the
/// bundled rule table. Empty input gives an empty sequence.
pub fn ref_phones_for_german(word: &str) -> PhoneSequence {
    GermanG2p::bundled().phones(word)
}

/// A Standard German word together with its citation phones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceWord {
    pub orthography: String,
    pub ref_phones: PhoneSequence,
}

impl ReferenceWord {
    pub fn new(orthography: impl Into<String>, g2p: &GermanG2p) -> Self {
        let orthography = orthography.into();
        let ref_phones = g2p.phones(&orthography);
        ReferenceWord {
            orthography,
            ref_phones,
        }
    }
}

/// Splits a Standard German sentence into reference words. Punctuation is
/// stripped; tokens without letters are dropped.
pub fn reference_words(sentence: &str, g2p: &GermanG2p) -> Vec<ReferenceWord> {
    sentence
        .split_whitespace()
        .map(|tok| tok.chars().filter(|c| c.is_alphabetic()).collect::<String>())
        .filter(|w| !w.is_empty())
        .map(|w| ReferenceWord::new(w, g2p))
        .filter(|w| !w.ref_phones.is_empty())
        .collect()
}
