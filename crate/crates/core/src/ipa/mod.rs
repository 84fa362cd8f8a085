//! IPA tokenization, articulatory features, and the phone distance used as the
//! alignment substitution cost.
//!
//! The chart is a tab-separated file (`data/ipa_chart.tsv`), one row per
//! symbol: `symbol  category  f1  f2  f3`, where vowels carry height,
//! backness and rounding and consonants place, manner and voicing.

mod chart;
mod distance;
mod tokenize;

pub use chart::{Backness, ConsonantFeatures, FeatureBundle, Height, IpaChart, Manner, Place, VowelFeatures};
pub use distance::{phone_distance, DistanceWeights};
pub use tokenize::{features_of, tokenize, Category, Phone, PhoneKind, PhoneSequence, WordGap};

#[derive(Debug, thiserror::Error)]
pub enum IpaError {
    #[error("IPA chart line {line}: {message}")]
    Chart { line: usize, message: String },
    #[error("distance weights: {0}")]
    Weights(String),
}
