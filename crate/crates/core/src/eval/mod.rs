//! Confusion matrices, the reported metrics, run aggregation and the
//! human-baseline abstention rule.

mod report;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dataset::Segment;
use crate::{Label, PredictionRecord, Task};

pub use report::render_report;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("confusion matrix is empty")]
    Empty,
    #[error("prediction for unknown segment `{0}`")]
    UnknownSegment(String),
    #[error("segment `{0}` has no gold label for this task")]
    MissingGold(String),
    #[error("record for `{segment}` is for the {found} task, expected {expected}")]
    TaskMismatch {
        segment: String,
        expected: Task,
        found: Task,
    },
    #[error("record for `{0}` has no label")]
    MissingLabel(String),
    #[error("matrix must be {expected}x{expected}")]
    Shape { expected: usize },
    #[error("no reports to aggregate")]
    NoReports,
    #[error("reports mix tasks")]
    MixedTasks,
}

/// Counts indexed by (gold class, predicted class) in task label order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    task: Task,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(task: Task) -> Self {
        let n = task.class_count();
        ConfusionMatrix {
            task,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_rows(task: Task, rows: &[&[u64]]) -> Result<Self, EvalError> {
        let n = task.class_count();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(EvalError::Shape { expected: n });
        }
        Ok(ConfusionMatrix {
            task,
            counts: rows.iter().map(|r| r.to_vec()).collect(),
        })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn add(&mut self, gold: Label, predicted: Label) {
        let g = self.task.index_of(gold).expect("gold label in task space");
        let p = self.task.index_of(predicted).expect("predicted label in task space");
        self.counts[g][p] += 1;
    }

    pub fn get(&self, gold: usize, predicted: usize) -> u64 {
        self.counts[gold][predicted]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, gold: usize) -> u64 {
        self.counts[gold].iter().sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        self.counts.iter().map(|r| r[predicted]).sum()
    }
}

/// What [`confusion`] found in a prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct Tally {
    pub matrix: ConfusionMatrix,
    pub records: usize,
    pub errors: usize,
    /// Abstentions per gold class, in label order.
    pub abstained: Vec<u64>,
}

impl Tally {
    pub fn abstained_total(&self) -> u64 {
        self.abstained.iter().sum()
    }
}

/// Builds the confusion matrix of `records` against the gold labels in
/// `golds`. Errored records are counted, not scored; abstentions are counted
/// per gold class.
pub fn confusion(records: &[PredictionRecord], golds: &[Segment], task: Task) -> Result<Tally, EvalError> {
    let gold_of: HashMap<&str, &Segment> = golds.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut tally = Tally {
        matrix: ConfusionMatrix::new(task),
        records: records.len(),
        errors: 0,
        abstained: vec![0; task.class_count()],
    };
    for r in records {
        if r.task != task {
            return Err(EvalError::TaskMismatch {
                segment: r.segment_id.clone(),
                expected: task,
                found: r.task,
            });
        }
        let seg = gold_of
            .get(r.segment_id.as_str())
            .ok_or_else(|| EvalError::UnknownSegment(r.segment_id.clone()))?;
        if r.is_error() {
            tally.errors += 1;
            continue;
        }
        let gold = seg
            .gold(task)
            .ok_or_else(|| EvalError::MissingGold(r.segment_id.clone()))?;
        let gi = task.index_of(gold).expect("gold label validated on load");
        if r.abstained {
            tally.abstained[gi] += 1;
            continue;
        }
        let predicted = r.label.ok_or_else(|| EvalError::MissingLabel(r.segment_id.clone()))?;
        if !task.contains(predicted) {
            return Err(EvalError::TaskMismatch {
                segment: r.segment_id.clone(),
                expected: task,
                found: predicted.task(),
            });
        }
        tally.matrix.add(gold, predicted);
    }
    Ok(tally)
}

/// The metrics reported per experiment. Percentages are in [0, 100].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_accuracy: BTreeMap<Label, f64>,
    pub prediction_counts: BTreeMap<Label, u64>,
    /// All records, including errored and abstained ones.
    pub n: usize,
    pub errors: usize,
    #[serde(default)]
    pub abstained: usize,
}

fn pct(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        100.0 * num / den
    }
}

/// Accuracy, macro-F1 (F1 = 0 for a class with no gold and no predicted
/// items), recall per gold class and column sums.
pub fn metrics(m: &ConfusionMatrix) -> Result<EvalReport, EvalError> {
    let total = m.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let task = m.task();
    let labels = task.labels();
    let mut f1_sum = 0.0;
    let mut per_class_accuracy = BTreeMap::new();
    let mut prediction_counts = BTreeMap::new();
    for (i, &label) in labels.iter().enumerate() {
        let tp = m.get(i, i) as f64;
        let gold = m.row_sum(i) as f64;
        let predicted = m.col_sum(i) as f64;
        // 2PR/(P+R) simplifies to 2tp/(gold+predicted).
        if gold + predicted > 0.0 {
            f1_sum += 2.0 * tp / (gold + predicted);
        }
        per_class_accuracy.insert(label, pct(tp, gold));
        prediction_counts.insert(label, m.col_sum(i));
    }
    Ok(EvalReport {
        task,
        accuracy: pct(m.trace() as f64, total as f64),
        macro_f1: 100.0 * f1_sum / labels.len() as f64,
        per_class_accuracy,
        prediction_counts,
        n: total as usize,
        errors: 0,
        abstained: 0,
    })
}

/// Scores a prediction file. `n` counts every record; errored and abstained
/// records are excluded from the matrix. Fails with [`EvalError::Empty`]
/// when nothing was scored.
pub fn evaluate(records: &[PredictionRecord], golds: &[Segment], task: Task) -> Result<EvalReport, EvalError> {
    let tally = confusion(records, golds, task)?;
    let mut report = metrics(&tally.matrix)?;
    report.n = tally.records;
    report.errors = tally.errors;
    report.abstained = tally.abstained_total() as usize;
    Ok(report)
}

/// Human-baseline accuracy where each abstention counts as half correct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanScore {
    /// (correct decided + abstained / 2) / total, as a percentage.
    pub overall: f64,
    /// Accuracy over decided segments only.
    pub decided_accuracy: f64,
    pub correct: u64,
    pub decided: u64,
    pub abstained: u64,
    /// Same rule applied within each gold class.
    pub per_class: BTreeMap<Label, f64>,
}

/// Applies the half-split rule: within each gold class, half the abstentions
/// are counted correct and half incorrect.
pub fn human_score(tally: &Tally) -> HumanScore {
    let m = &tally.matrix;
    let labels = m.task().labels();
    let mut per_class = BTreeMap::new();
    let mut credited = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        let abstained = tally.abstained[i] as f64;
        let class_credit = m.get(i, i) as f64 + abstained / 2.0;
        credited += class_credit;
        per_class.insert(label, pct(class_credit, m.row_sum(i) as f64 + abstained));
    }
    let decided = m.total();
    let abstained = tally.abstained_total();
    HumanScore {
        overall: pct(credited, (decided + abstained) as f64),
        decided_accuracy: pct(m.trace() as f64, decided as f64),
        correct: m.trace(),
        decided,
        abstained,
        per_class,
    }
}

/// [`human_score`] from aggregate counts.
pub fn human_score_counts(correct: u64, decided: u64, abstained: u64) -> f64 {
    pct(correct as f64 + abstained as f64 / 2.0, (decided + abstained) as f64)
}

/// Mean and population standard deviation over repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub runs: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_macro_f1: f64,
    pub std_macro_f1: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn aggregate_runs(reports: &[EvalReport]) -> Result<RunAggregate, EvalError> {
    let first = reports.first().ok_or(EvalError::NoReports)?;
    if reports.iter().any(|r| r.task != first.task) {
        return Err(EvalError::MixedTasks);
    }
    let acc: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
    let f1: Vec<f64> = reports.iter().map(|r| r.macro_f1).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&acc);
    let (mean_macro_f1, std_macro_f1) = mean_std(&f1);
    Ok(RunAggregate {
        runs: reports.len(),
        mean_accuracy,
        std_accuracy,
        mean_macro_f1,
        std_macro_f1,
    })
}
