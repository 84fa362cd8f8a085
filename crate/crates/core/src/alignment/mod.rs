//! Global alignment of a dialect phone sequence onto Standard German
//! reference words.
//!
//! Every alignment unit is attributed to the reference word (etymon) it
//! belongs to, so downstream rules can reason per word rather than over bare
//! phones.

mod g2p;
mod render;

use serde::{Deserialize, Serialize};

use crate::ipa::{DistanceWeights, Phone, PhoneSequence};

pub use g2p::{ref_phones_for_german, reference_words, GermanG2p, ReferenceWord};
pub use render::render_alignment;

/// Default insert/delete cost; below the cross-category substitution cost.
pub const DEFAULT_GAP_PENALTY: f64 = 0.6;

// Costs closer than this are treated as equal during tie-breaking.
const TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum AlignmentError {
    #[error("G2P table line {line}: {message}")]
    G2pTable { line: usize, message: String },
    #[error("gap penalty must be positive and finite, got {0}")]
    GapPenalty(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditOp {
    Match,
    Substitute,
    /// A reference phone with no dialect counterpart.
    Delete,
    /// A dialect phone with no reference counterpart.
    Insert,
}

impl EditOp {
    pub fn symbol(self) -> &'static str {
        match self {
            EditOp::Match => "=",
            EditOp::Substitute => "~",
            EditOp::Delete => "-",
            EditOp::Insert => "+",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentUnit {
    /// Index into [`Alignment::words`].
    pub ref_word: usize,
    pub op: EditOp,
    pub ref_phone: Option<Phone>,
    pub dialect_phone: Option<Phone>,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    /// Orthography of the reference words, indexed by `AlignmentUnit::ref_word`.
    pub words: Vec<String>,
    pub units: Vec<AlignmentUnit>,
    pub total_cost: f64,
}

impl Alignment {
    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Dialect phones in order (the dialect side of the alignment).
    pub fn dialect_phones(&self) -> impl Iterator<Item = &Phone> {
        self.units.iter().filter_map(|u| u.dialect_phone.as_ref())
    }

    /// Reference phones in order (the concatenated reference words).
    pub fn ref_phones(&self) -> impl Iterator<Item = &Phone> {
        self.units.iter().filter_map(|u| u.ref_phone.as_ref())
    }
}

/// Needleman–Wunsch aligner with articulatory substitution costs.
#[derive(Debug, Clone, Copy)]
pub struct Aligner<'w> {
    weights: &'w DistanceWeights,
    gap_penalty: f64,
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Diagonal,
    Up,
    Left,
}

impl<'w> Aligner<'w> {
    pub fn new(weights: &'w DistanceWeights, gap_penalty: f64) -> Result<Self, AlignmentError> {
        if !(gap_penalty.is_finite() && gap_penalty > 0.0) {
            return Err(AlignmentError::GapPenalty(gap_penalty));
        }
        Ok(Aligner { weights, gap_penalty })
    }

    pub fn gap_penalty(&self) -> f64 {
        self.gap_penalty
    }

    /// Minimum-cost global alignment.
    ///
    /// Ties are broken toward match, then substitution, then deletion, then
    /// insertion, so identical inputs always give identical alignments.
    pub fn align(&self, dialect: &PhoneSequence, refs: &[ReferenceWord]) -> Alignment {
        let mut ref_phones: Vec<&Phone> = Vec::new();
        let mut owner: Vec<usize> = Vec::new();
        for (w, word) in refs.iter().enumerate() {
            for p in word.ref_phones.iter() {
                ref_phones.push(p);
                owner.push(w);
            }
        }
        let dia = &dialect.phones;
        let (n, m) = (ref_phones.len(), dia.len());
        let cols = m + 1;
        let mut cost = vec![0.0f64; (n + 1) * cols];
        let mut step = vec![Step::Diagonal; (n + 1) * cols];
        for i in 1..=n {
            cost[i * cols] = i as f64 * self.gap_penalty;
            step[i * cols] = Step::Up;
        }
        for j in 1..=m {
            cost[j] = j as f64 * self.gap_penalty;
            step[j] = Step::Left;
        }
        for i in 1..=n {
            for j in 1..=m {
                let diag = cost[(i - 1) * cols + j - 1] + self.weights.distance(ref_phones[i - 1], &dia[j - 1]);
                let up = cost[(i - 1) * cols + j] + self.gap_penalty;
                let left = cost[i * cols + j - 1] + self.gap_penalty;
                let (mut best, mut choice) = (diag, Step::Diagonal);
                if up < best - TIE_EPSILON {
                    best = up;
                    choice = Step::Up;
                }
                if left < best - TIE_EPSILON {
                    best = left;
                    choice = Step::Left;
                }
                cost[i * cols + j] = best;
                step[i * cols + j] = choice;
            }
        }

        let mut rev: Vec<(Option<usize>, Option<usize>)> = Vec::with_capacity(n + m);
        let (mut i, mut j) = (n, m);
        while i > 0 || j > 0 {
            match step[i * cols + j] {
                Step::Diagonal => {
                    rev.push((Some(i - 1), Some(j - 1)));
                    i -= 1;
                    j -= 1;
                }
                Step::Up => {
                    rev.push((Some(i - 1), None));
                    i -= 1;
                }
                Step::Left => {
                    rev.push((None, Some(j - 1)));
                    j -= 1;
                }
            }
        }

        let mut units = Vec::with_capacity(rev.len());
        let mut current_word = 0;
        for (ri, dj) in rev.into_iter().rev() {
            let ref_phone = ri.map(|k| ref_phones[k].clone());
            let dialect_phone = dj.map(|k| dia[k].clone());
            if let Some(k) = ri {
                current_word = owner[k];
            }
            let (op, cost) = match (&ref_phone, &dialect_phone) {
                (Some(r), Some(d)) => {
                    let c = self.weights.distance(r, d);
                    (
                        if r.symbol == d.symbol {
                            EditOp::Match
                        } else {
                            EditOp::Substitute
                        },
                        c,
                    )
                }
                (Some(_), None) => (EditOp::Delete, self.gap_penalty),
                (None, Some(_)) => (EditOp::Insert, self.gap_penalty),
                (None, None) => unreachable!("traceback emits at least one phone per step"),
            };
            units.push(AlignmentUnit {
                ref_word: current_word,
                op,
                ref_phone,
                dialect_phone,
                cost,
            });
        }
        let total_cost = units.iter().map(|u| u.cost).sum();
        Alignment {
            words: refs.iter().map(|w| w.orthography.clone()).collect(),
            units,
            total_cost,
        }
    }
}

/// Aligns with the bundled distance weights.
///
/// # Panics
///
/// If `gap_penalty` is not positive and finite.
pub fn align(dialect: &PhoneSequence, refs: &[ReferenceWord], gap_penalty: f64) -> Alignment {
    Aligner::new(DistanceWeights::bundled(), gap_penalty)
        .expect("invalid gap penalty")
        .align(dialect, refs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipa::{features_of, tokenize, IpaChart};

    fn seq(symbols: &[&str]) -> PhoneSequence {
        symbols.iter().map(|s| features_of(s, IpaChart::bundled())).collect()
    }

    fn word(orth: &str, symbols: &[&str]) -> ReferenceWord {
        ReferenceWord {
            orthography: orth.into(),
            ref_phones: seq(symbols),
        }
    }

    #[test]
    fn identical_sequences_all_match() {
        let refs = [word("Tag", &["t", "aː", "k"])];
        let a = align(&seq(&["t", "aː", "k"]), &refs, DEFAULT_GAP_PENALTY);
        assert!(a.units.iter().all(|u| u.op == EditOp::Match));
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn empty_dialect_gives_deletes() {
        let refs = [word("Tag", &["t", "aː", "k"]), word("gut", &["ɡ", "uː", "t"])];
        let a = align(&PhoneSequence::default(), &refs, 0.6);
        assert_eq!(a.units.len(), 6);
        assert!(a.units.iter().all(|u| u.op == EditOp::Delete));
        assert!((a.total_cost - 6.0 * 0.6).abs() < 1e-12);
        let words: Vec<_> = a.units.iter().map(|u| u.ref_word).collect();
        assert_eq!(words, [0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn empty_refs_give_inserts_on_first_word() {
        let a = align(&seq(&["a", "b"]), &[], 0.6);
        assert!(a.units.iter().all(|u| u.op == EditOp::Insert && u.ref_word == 0));
        assert!(a.words.is_empty());
    }

    #[test]
    fn inserts_inherit_previous_word() {
        // The trailing x has no reference counterpart.
        let refs = [word("a", &["a"]), word("b", &["b"])];
        let a = align(&seq(&["a", "b", "x"]), &refs, 0.6);
        let last = a.units.last().unwrap();
        assert_eq!(last.op, EditOp::Insert);
        assert_eq!(last.ref_word, 1);
        // A leading insert belongs to the first word.
        let a = align(&seq(&["x", "a", "b"]), &refs, 0.6);
        assert_eq!(a.units[0].op, EditOp::Insert);
        assert_eq!(a.units[0].ref_word, 0);
    }

    #[test]
    fn substitution_preferred_over_gap_pair() {
        // i→y costs 0.2, far cheaper than delete + insert (1.2).
        let refs = [word("x", &["i"])];
        let a = align(&seq(&["y"]), &refs, 0.6);
        assert_eq!(a.units.len(), 1);
        assert_eq!(a.units[0].op, EditOp::Substitute);
    }

    #[test]
    fn cross_category_becomes_gaps() {
        let refs = [word("x", &["i"])];
        let a = align(&seq(&["t"]), &refs, 0.6);
        // substitution 1.0 < 1.2 for delete+insert
        assert_eq!(a.units.len(), 1);
        let a = align(&seq(&["t"]), &refs, 0.4);
        assert_eq!(
            a.units.iter().map(|u| u.op).collect::<Vec<_>>(),
            [EditOp::Insert, EditOp::Delete]
        );
    }

    #[test]
    fn rejects_bad_gap_penalty() {
        assert!(Aligner::new(DistanceWeights::bundled(), 0.0).is_err());
        assert!(Aligner::new(DistanceWeights::bundled(), f64::NAN).is_err());
    }

    #[test]
    fn tie_prefers_delete_before_insert() {
        // ref [a], dialect [t]: with gap 0.5 both delete+insert (1.0) and the
        // cross-category substitution (1.0) tie; the substitution wins.
        let refs = [word("x", &["a"])];
        let a = align(&seq(&["t"]), &refs, 0.5);
        assert_eq!(a.units.len(), 1);
        assert_eq!(a.units[0].op, EditOp::Substitute);
        // ref [a, a], dialect [a]: which a is deleted is a tie; the traceback
        // prefers the match at the end, so the first a is deleted.
        let refs = [word("x", &["a", "a"])];
        let a = align(&seq(&["a"]), &refs, 0.6);
        assert_eq!(
            a.units.iter().map(|u| u.op).collect::<Vec<_>>(),
            [EditOp::Delete, EditOp::Match]
        );
    }

    #[test]
    fn tokenized_input_with_words() {
        let chart = IpaChart::bundled();
        let dialect = tokenize("miːr hɛnd", chart);
        let refs = reference_words("Wir haben", GermanG2p::bundled());
        let a = align(&dialect, &refs, DEFAULT_GAP_PENALTY);
        assert_eq!(a.dialect_phones().count(), dialect.len());
        assert_eq!(a.words, ["Wir", "haben"]);
    }
}
