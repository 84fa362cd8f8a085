//! Swiss German dialect region classification from automatic IPA
//! transcriptions.
//!
//! The crate covers the whole offline pipeline:
//!
//! - [`ipa`]: tokenizer, articulatory features, phone distance
//! - [`alignment`]: German grapheme-to-phone rules and dialect-to-reference alignment
//! - [`features`]: isogloss rule engine producing class scores
//! - [`agent`]: prompt construction, chat-completion backends, the node graph
//! - [`dataset`]: manifests, label mapping, balanced split sampling
//! - [`eval`]: confusion matrices, metrics, human abstention scoring

pub mod agent;
pub mod alignment;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod ipa;
mod labels;
mod prediction;

pub use labels::{Label, Task, UnknownLabel};
pub use prediction::{
    records_from_jsonl, records_to_jsonl, ClassScores, Prediction, PredictionRecord, PredictionSource,
};
