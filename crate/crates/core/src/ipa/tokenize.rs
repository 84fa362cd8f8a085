use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use super::chart::{ConsonantFeatures, FeatureBundle, IpaChart, VowelFeatures};

const LENGTH_MARK: char = 'ː';

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Vowel,
    Consonant,
    Unknown,
}

/// Feature bundle carried by a phone. The variant is the phone's category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "category", rename_all = "lowercase")]
pub enum PhoneKind {
    Vowel(VowelFeatures),
    Consonant(ConsonantFeatures),
    Unknown,
}

/// One tokenized IPA unit: a base symbol plus the diacritics bound to it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phone {
    pub symbol: String,
    pub kind: PhoneKind,
    pub long: bool,
}

impl Phone {
    pub fn category(&self) -> Category {
        match self.kind {
            PhoneKind::Vowel(_) => Category::Vowel,
            PhoneKind::Consonant(_) => Category::Consonant,
            PhoneKind::Unknown => Category::Unknown,
        }
    }

    pub fn vowel(&self) -> Option<&VowelFeatures> {
        match &self.kind {
            PhoneKind::Vowel(v) => Some(v),
            _ => None,
        }
    }

    pub fn consonant(&self) -> Option<&ConsonantFeatures> {
        match &self.kind {
            PhoneKind::Consonant(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self.kind, PhoneKind::Unknown)
    }
}

/// Whitespace dropped between two phones, kept so the input can be restored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WordGap {
    /// Index of the phone that follows the gap (`phones.len()` for trailing space).
    pub before: usize,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhoneSequence {
    pub phones: Vec<Phone>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gaps: Vec<WordGap>,
}

impl PhoneSequence {
    /// A sequence without word boundaries.
    pub fn from_phones(phones: Vec<Phone>) -> Self {
        PhoneSequence {
            phones,
            gaps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.phones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phones.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Phone> {
        self.phones.iter()
    }

    /// Restores the tokenized text, whitespace included.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut gaps = self.gaps.iter().peekable();
        for (i, phone) in self.phones.iter().enumerate() {
            while let Some(gap) = gaps.next_if(|g| g.before == i) {
                out.push_str(&gap.text);
            }
            out.push_str(&phone.symbol);
        }
        for gap in gaps {
            out.push_str(&gap.text);
        }
        out
    }

    /// Phone index ranges of the whitespace-separated words.
    pub fn word_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut ranges = Vec::new();
        let mut start = 0;
        for gap in &self.gaps {
            if gap.before > start {
                ranges.push(start..gap.before);
            }
            start = start.max(gap.before);
        }
        if self.phones.len() > start {
            ranges.push(start..self.phones.len());
        }
        ranges
    }

    /// Space-separated symbols, for display.
    pub fn symbols(&self) -> Vec<&str> {
        self.phones.iter().map(|p| p.symbol.as_str()).collect()
    }
}

impl FromIterator<Phone> for PhoneSequence {
    fn from_iter<I: IntoIterator<Item = Phone>>(iter: I) -> Self {
        PhoneSequence::from_phones(iter.into_iter().collect())
    }
}

fn is_combining(c: char) -> bool {
    matches!(c as u32,
        0x0300..=0x036F | 0x1AB0..=0x1AFF | 0x1DC0..=0x1DFF | 0x20D0..=0x20FF | 0xFE20..=0xFE2F)
}

fn is_tie(c: char) -> bool {
    c == '\u{0361}' || c == '\u{035C}'
}

/// Characters that modify the preceding symbol: combining marks, the length
/// marks, and superscript modifier letters (aspiration, labialization, …).
/// Stress marks are prefixes and do not bind.
fn binds_left(c: char) -> bool {
    is_combining(c)
        || matches!(c as u32,
            0x02B0..=0x02BF | 0x02D0 | 0x02D1 | 0x02DE | 0x02E0..=0x02E4
            | 0x1D2C..=0x1D6A | 0x1D9B..=0x1DBF | 0x2071 | 0x207F)
}

/// Splits an IPA string into phones.
///
/// Segmentation starts from extended grapheme clusters, then binds modifier
/// letters (`ː`, `ʰ`, …) to the preceding cluster and joins the two halves of
/// a tie-bar ligature (`t͡s`). Whitespace separates words and is recorded in
/// [`PhoneSequence::gaps`]. Symbols missing from the chart become
/// [`PhoneKind::Unknown`] phones; this function never fails.
pub fn tokenize(ipa_text: &str, chart: &IpaChart) -> PhoneSequence {
    let mut symbols: Vec<String> = Vec::new();
    let mut gaps: Vec<WordGap> = Vec::new();
    // True while the last emitted item is a phone (no whitespace since).
    let mut attached = false;

    for cluster in ipa_text.graphemes(true) {
        if cluster.chars().all(char::is_whitespace) {
            match gaps.last_mut() {
                Some(gap) if gap.before == symbols.len() => gap.text.push_str(cluster),
                _ => gaps.push(WordGap {
                    before: symbols.len(),
                    text: cluster.to_string(),
                }),
            }
            attached = false;
            continue;
        }
        let first = cluster.chars().next().expect("graphemes are non-empty");
        let joins_previous = attached
            && symbols
                .last()
                .is_some_and(|prev| binds_left(first) || prev.chars().last().is_some_and(is_tie));
        if joins_previous {
            symbols.last_mut().unwrap().push_str(cluster);
        } else {
            symbols.push(cluster.to_string());
        }
        attached = true;
    }

    let phones = symbols.iter().map(|s| features_of(s, chart)).collect();
    PhoneSequence { phones, gaps }
}

/// Looks up a (possibly diacritic-bearing) symbol in the chart.
///
/// Whole-symbol matches win (this is how tie-bar affricates resolve); otherwise
/// the base character decides. Diacritics other than the length mark carry no
/// features.
pub fn features_of(symbol: &str, chart: &IpaChart) -> Phone {
    let long = symbol.contains(LENGTH_MARK);
    let bundle = chart.get(symbol).copied().or_else(|| {
        let stripped: String = symbol.chars().filter(|&c| !binds_left(c)).collect();
        chart.get(&stripped).copied().or_else(|| {
            let base = symbol.chars().next().filter(|&c| !binds_left(c))?;
            chart.get(base.encode_utf8(&mut [0; 4])).copied()
        })
    });
    let kind = match bundle {
        Some(FeatureBundle::Vowel(v)) => PhoneKind::Vowel(v),
        Some(FeatureBundle::Consonant(c)) => PhoneKind::Consonant(c),
        None => {
            log::debug!("IPA symbol {symbol:?} is not in the chart");
            PhoneKind::Unknown
        }
    };
    Phone {
        symbol: symbol.to_string(),
        kind,
        long,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipa::chart::{Backness, Height, Manner, Place};

    fn chart() -> &'static IpaChart {
        IpaChart::bundled()
    }

    fn syms(text: &str) -> Vec<String> {
        tokenize(text, chart()).phones.into_iter().map(|p| p.symbol).collect()
    }

    #[test]
    fn empty_input() {
        let seq = tokenize("", chart());
        assert!(seq.is_empty());
        assert!(seq.gaps.is_empty());
    }

    #[test]
    fn length_mark_binds_left() {
        let seq = tokenize("aː", chart());
        assert_eq!(seq.len(), 1);
        assert_eq!(seq.phones[0].symbol, "aː");
        assert!(seq.phones[0].long);
        assert_eq!(seq.phones[0].category(), Category::Vowel);
    }

    #[test]
    fn plain_symbols_split() {
        assert_eq!(syms("ks"), ["k", "s"]);
    }

    #[test]
    fn tie_bar_joins_only_when_present() {
        assert_eq!(syms("t͡s"), ["t͡s"]);
        assert_eq!(syms("ts"), ["t", "s"]);
        let affricate = &tokenize("t͡s", chart()).phones[0];
        assert_eq!(affricate.consonant().unwrap().manner, Manner::Affricate);
    }

    #[test]
    fn leading_diacritic_stands_alone() {
        let seq = tokenize("ːa", chart());
        assert_eq!(seq.symbols(), ["ː", "a"]);
        assert!(seq.phones[0].is_unknown());
    }

    #[test]
    fn whitespace_recorded_and_restored() {
        let text = "  miːr  hɛnd\tkseː ";
        let seq = tokenize(text, chart());
        assert_eq!(seq.to_text(), text);
        assert_eq!(seq.word_ranges(), vec![0..3, 3..7, 7..10]);
        // Diacritics do not bind across a word boundary.
        assert_eq!(tokenize("a ː", chart()).symbols(), ["a", "ː"]);
    }

    #[test]
    fn features_of_examples() {
        let i = features_of("i", chart());
        let v = i.vowel().unwrap();
        assert_eq!(
            (v.height, v.backness, v.rounded),
            (Height::Close, Backness::Front, false)
        );
        let t = features_of("t", chart());
        let c = t.consonant().unwrap();
        assert_eq!((c.place, c.manner, c.voiced), (Place::Alveolar, Manner::Plosive, false));
        assert_eq!(features_of("₪", chart()).category(), Category::Unknown);
    }

    #[test]
    fn diacritics_keep_base_features() {
        let nasal = features_of("ɛ̃ː", chart());
        assert_eq!(nasal.vowel(), features_of("ɛ", chart()).vowel());
        assert!(nasal.long);
        let aspirated = features_of("kʰ", chart());
        assert_eq!(aspirated.consonant(), features_of("k", chart()).consonant());
        assert!(!aspirated.long);
    }
}
