use super::{detect, score, FeatureError, FeatureHit, RuleSet};
use crate::alignment::{reference_words, Aligner, Alignment, GermanG2p, ReferenceWord, DEFAULT_GAP_PENALTY};
use crate::dataset::Segment;
use crate::ipa::{tokenize, DistanceWeights, IpaChart, PhoneSequence};
use crate::prediction::{ClassScores, Prediction, PredictionSource};
use crate::Task;

/// Every intermediate of the rule pipeline for one segment.
#[derive(Debug, Clone)]
pub struct SegmentAnalysis {
    pub dialect: PhoneSequence,
    pub references: Vec<ReferenceWord>,
    pub alignment: Alignment,
    pub hits: Vec<FeatureHit>,
    pub scores: ClassScores,
}

/// Deterministic classifier: tokenize, transcribe the reference, align,
/// detect, score, argmax. Uses the bundled chart, G2P table and weights.
#[derive(Debug, Clone)]
pub struct RuleEngine {
    rules: RuleSet,
}

impl RuleEngine {
    pub fn new(rules: RuleSet) -> Self {
        RuleEngine { rules }
    }

    pub fn starter() -> Self {
        Self::new(RuleSet::starter().clone())
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn analyze(&self, seg: &Segment, task: Task) -> Result<SegmentAnalysis, FeatureError> {
        analyze(seg, &self.rules, task)
    }

    pub fn classify(&self, seg: &Segment, task: Task) -> Result<Prediction, FeatureError> {
        classify_rules(seg, &self.rules, task)
    }
}

fn analyze(seg: &Segment, rules: &RuleSet, task: Task) -> Result<SegmentAnalysis, FeatureError> {
    if !seg.has_transcriptions() {
        return Err(FeatureError::MissingTranscription(seg.id.clone()));
    }
    let dialect = tokenize(&seg.ipa_transcription, IpaChart::bundled());
    let references = reference_words(&seg.standard_german, GermanG2p::bundled());
    let alignment = Aligner::new(DistanceWeights::bundled(), DEFAULT_GAP_PENALTY)
        .expect("default gap penalty is valid")
        .align(&dialect, &references);
    let hits = detect(&alignment, rules, task);
    let scores = score(&hits, task);
    Ok(SegmentAnalysis {
        dialect,
        references,
        alignment,
        hits,
        scores,
    })
}

/// Classifies one segment with `rules`. Ties go to the first label in the
/// task's fixed order and are flagged.
pub fn classify_rules(seg: &Segment, rules: &RuleSet, task: Task) -> Result<Prediction, FeatureError> {
    let analysis = analyze(seg, rules, task)?;
    let (label, tie) = analysis.scores.argmax();
    Ok(Prediction {
        segment_id: seg.id.clone(),
        task,
        label: Some(label),
        class_scores: Some(analysis.scores),
        abstained: false,
        tie,
        run_id: String::new(),
        source: PredictionSource::Rules,
    })
}
