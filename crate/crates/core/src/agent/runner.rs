use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::backend::ChatBackend;
use super::graph::{run_baseline, run_graph, AgentConfig};
use crate::dataset::Segment;
use crate::features::{classify_rules, RuleSet};
use crate::prediction::{PredictionRecord, PredictionSource};
use crate::Task;

/// How segments are classified.
#[derive(Clone, Copy)]
pub enum Classifier<'a> {
    Rules(&'a RuleSet),
    Baseline(&'a dyn ChatBackend),
    Agent(&'a dyn ChatBackend),
}

impl Classifier<'_> {
    pub fn source(&self) -> PredictionSource {
        match self {
            Classifier::Rules(_) => PredictionSource::Rules,
            Classifier::Baseline(_) => PredictionSource::Baseline,
            Classifier::Agent(_) => PredictionSource::Agent,
        }
    }

    fn classify(&self, seg: &Segment, task: Task, config: &AgentConfig, run_id: &str) -> PredictionRecord {
        let outcome = match self {
            Classifier::Rules(rules) => classify_rules(seg, rules, task).map_err(|e| e.to_string()),
            Classifier::Baseline(b) => run_baseline(seg, task, *b, config).map_err(|e| e.to_string()),
            Classifier::Agent(b) => run_graph(seg, task, *b, config).map_err(|e| e.to_string()),
        };
        match outcome {
            Ok(mut p) => {
                p.run_id = run_id.to_string();
                PredictionRecord::from(p)
            }
            Err(e) => {
                log::debug!("segment {}: {e}", seg.id);
                PredictionRecord::failed(seg.id.clone(), task, self.source(), run_id, e)
            }
        }
    }
}

/// Classifies every segment, up to `concurrency` at a time. Returns one
/// record per segment in input order; failures become error records.
pub fn run_segments(
    segments: &[Segment],
    task: Task,
    classifier: Classifier<'_>,
    config: &AgentConfig,
    concurrency: usize,
    run_id: &str,
) -> Vec<PredictionRecord> {
    let workers = concurrency.max(1).min(segments.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<PredictionRecord>>> = segments.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(seg) = segments.get(i) else { break };
                let record = classifier.classify(seg, task, config, run_id);
                *slots[i].lock().unwrap() = Some(record);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every segment is processed"))
        .collect()
}
