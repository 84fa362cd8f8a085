//! Annotation sessions on disk.
//!
//! ```text
//! <data_dir>/sessions/<id>/manifest.jsonl   segments, gold included
//! <data_dir>/sessions/<id>/session.json     task, seed, presentation order
//! <data_dir>/sessions/<id>/decisions.jsonl  one decision per line, appended
//! ```
//!
//! A decision is synced to disk before it is acknowledged. On open the
//! decision file is replayed; a torn last line (a crash mid-append) is cut
//! off, anything else unreadable is an error.

use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use alemannic::alignment::render_alignment;
use alemannic::dataset::{annotate, load_manifest, write_manifest, DatasetConfig, Segment};
use alemannic::eval::{confusion, human_score, metrics, EvalReport, HumanScore};
use alemannic::features::RuleEngine;
use alemannic::{Label, PredictionRecord, PredictionSource, Task};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const MANIFEST: &str = "manifest.jsonl";
const META: &str = "session.json";
const DECISIONS: &str = "decisions.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("session `{0}` does not exist")]
    NotFound(String),
    #[error("session `{0}` already exists")]
    Exists(String),
    #[error("invalid session id `{0}`")]
    InvalidId(String),
    #[error("{0}")]
    Dataset(#[from] alemannic::dataset::DatasetError),
    #[error("{path}:{line}: {message}")]
    Corrupt { path: String, line: usize, message: String },
    #[error("segment `{0}` is not part of this session")]
    UnknownSegment(String),
    #[error("`{0}` is not a {1} label")]
    WrongTask(Label, Task),
    #[error("segment `{segment}` was already decided as {existing}")]
    Conflict { segment: String, existing: Choice },
    #[error("no decisions yet")]
    Empty,
    #[error("no segment in the manifest has a {0} gold label")]
    NoGold(Task),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SessionError + '_ {
    move |source| SessionError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Session ids become directory names: ASCII letters, digits, `-` and `_`.
pub fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

pub fn session_dir(data_dir: &Path, id: &str) -> Result<PathBuf, SessionError> {
    if !valid_id(id) {
        return Err(SessionError::InvalidId(id.to_string()));
    }
    Ok(data_dir.join("sessions").join(id))
}

/// A class, or the explicit choice not to decide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Label(Label),
    Abstain,
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Label(l) => f.write_str(l.code()),
            Choice::Abstain => f.write_str("abstain"),
        }
    }
}

impl FromStr for Choice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim().eq_ignore_ascii_case("abstain") {
            return Ok(Choice::Abstain);
        }
        s.parse().map(Choice::Label).map_err(|e| e.to_string())
    }
}

impl Serialize for Choice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Choice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decision {
    pub segment_id: String,
    pub decision: Choice,
    /// Milliseconds since the Unix epoch.
    pub at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionMeta {
    pub session_id: String,
    pub task: Task,
    /// Seed of the presentation order.
    pub seed: u64,
    /// Segment ids in presentation order.
    pub order: Vec<String>,
}

/// What a client may see of a segment: no gold, no region metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPayload {
    pub index: usize,
    pub total: usize,
    pub segment_id: String,
    pub ipa_transcription: String,
    pub standard_german: String,
    pub alignment: String,
    pub choices: Vec<Choice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum NextPayload {
    Pending(SegmentPayload),
    Done { total: usize, annotated: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub segment_id: String,
    pub decision: Choice,
    /// True when the same decision had already been recorded.
    pub duplicate: bool,
    pub cursor: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub session_id: String,
    pub task: Task,
    /// True while segments are still pending.
    pub partial: bool,
    pub decided: usize,
    pub total: usize,
    /// Absent while every decision is an abstention.
    pub eval: Option<EvalReport>,
    pub human: HumanScore,
}

/// In-memory state rebuilt from disk; equal states mean equal sessions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionState {
    pub meta: SessionMeta,
    pub cursor: usize,
    pub decisions: Vec<Decision>,
}

pub struct Session {
    dir: PathBuf,
    meta: SessionMeta,
    segments: HashMap<String, Segment>,
    decisions: Vec<Decision>,
    decided: HashMap<String, usize>,
    log: File,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl Session {
    /// Creates a session over every segment of `manifest` with a gold label
    /// for `task`, shown in an order shuffled with `seed`.
    pub fn create(
        data_dir: &Path,
        id: &str,
        manifest: &[Segment],
        task: Task,
        seed: u64,
        config: &DatasetConfig,
    ) -> Result<Session, SessionError> {
        let dir = session_dir(data_dir, id)?;
        if dir.exists() {
            return Err(SessionError::Exists(id.to_string()));
        }
        let mut segments: Vec<Segment> = manifest
            .iter()
            .cloned()
            .map(|mut s| {
                annotate(&mut s, config);
                s
            })
            .filter(|s| s.gold(task).is_some())
            .collect();
        if segments.is_empty() {
            return Err(SessionError::NoGold(task));
        }
        segments.sort_by(|a, b| a.id.cmp(&b.id));
        let mut order: Vec<String> = segments.iter().map(|s| s.id.clone()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let meta = SessionMeta {
            session_id: id.to_string(),
            task,
            seed,
            order,
        };

        // Build in a sibling directory and rename, so a crash never leaves
        // a half-written session behind.
        let parent = dir.parent().expect("session dir has a parent");
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        let staging = tempfile::Builder::new()
            .prefix(".new-")
            .tempdir_in(parent)
            .map_err(io_err(parent))?;
        write_manifest(staging.path().join(MANIFEST), &segments)?;
        let meta_path = staging.path().join(META);
        let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
        std::fs::write(&meta_path, json + "\n").map_err(io_err(&meta_path))?;
        let log_path = staging.path().join(DECISIONS);
        File::create(&log_path)
            .and_then(|f| f.sync_all())
            .map_err(io_err(&log_path))?;
        let staged = staging.keep();
        std::fs::rename(&staged, &dir).map_err(io_err(&dir))?;
        if let Ok(d) = File::open(parent) {
            let _ = d.sync_all();
        }
        Session::open_dir(&dir)
    }

    pub fn open(data_dir: &Path, id: &str) -> Result<Session, SessionError> {
        let dir = session_dir(data_dir, id)?;
        if !dir.join(META).is_file() {
            return Err(SessionError::NotFound(id.to_string()));
        }
        Session::open_dir(&dir)
    }

    fn open_dir(dir: &Path) -> Result<Session, SessionError> {
        let meta_path = dir.join(META);
        let text = std::fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        let meta: SessionMeta = serde_json::from_str(&text).map_err(|e| SessionError::Corrupt {
            path: meta_path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;
        let segments: HashMap<String, Segment> = load_manifest(dir.join(MANIFEST))?
            .into_iter()
            .map(|s| (s.id.clone(), s))
            .collect();
        if let Some(missing) = meta.order.iter().find(|id| !segments.contains_key(*id)) {
            return Err(SessionError::Corrupt {
                path: meta_path.display().to_string(),
                line: 0,
                message: format!("ordered segment `{missing}` is not in the manifest"),
            });
        }

        let log_path = dir.join(DECISIONS);
        let bytes = std::fs::read(&log_path).map_err(io_err(&log_path))?;
        let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
        let log = OpenOptions::new()
            .append(true)
            .open(&log_path)
            .map_err(io_err(&log_path))?;
        if complete < bytes.len() {
            log::warn!(
                "{}: dropping {} bytes of an unfinished record",
                log_path.display(),
                bytes.len() - complete
            );
            log.set_len(complete as u64).map_err(io_err(&log_path))?;
            log.sync_all().map_err(io_err(&log_path))?;
        }

        let mut session = Session {
            dir: dir.to_path_buf(),
            meta,
            segments,
            decisions: Vec::new(),
            decided: HashMap::new(),
            log,
        };
        let text = String::from_utf8_lossy(&bytes[..complete]);
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let corrupt = |message: String| SessionError::Corrupt {
                path: log_path.display().to_string(),
                line: i + 1,
                message,
            };
            let d: Decision = serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
            session
                .check(&d.segment_id, d.decision)
                .map_err(|e| corrupt(e.to_string()))?;
            if session.decided.contains_key(&d.segment_id) {
                return Err(corrupt(format!("second decision for `{}`", d.segment_id)));
            }
            session.push(d);
        }
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.meta.session_id
    }

    pub fn task(&self) -> Task {
        self.meta.task
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn total(&self) -> usize {
        self.meta.order.len()
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    /// Index of the first undecided segment in presentation order; equals
    /// `total()` when the session is complete.
    pub fn cursor(&self) -> usize {
        self.meta
            .order
            .iter()
            .position(|id| !self.decided.contains_key(id))
            .unwrap_or(self.meta.order.len())
    }

    pub fn state(&self) -> SessionState {
        SessionState {
            meta: self.meta.clone(),
            cursor: self.cursor(),
            decisions: self.decisions.clone(),
        }
    }

    fn push(&mut self, d: Decision) {
        self.decided.insert(d.segment_id.clone(), self.decisions.len());
        self.decisions.push(d);
    }

    fn check(&self, segment_id: &str, choice: Choice) -> Result<(), SessionError> {
        if !self.segments.contains_key(segment_id) {
            return Err(SessionError::UnknownSegment(segment_id.to_string()));
        }
        if let Choice::Label(l) = choice {
            if !self.meta.task.contains(l) {
                return Err(SessionError::WrongTask(l, self.meta.task));
            }
        }
        Ok(())
    }

    pub fn next(&self) -> NextPayload {
        let cursor = self.cursor();
        let Some(id) = self.meta.order.get(cursor) else {
            return NextPayload::Done {
                total: self.total(),
                annotated: self.decisions.len(),
            };
        };
        let seg = &self.segments[id];
        let alignment = match RuleEngine::starter().analyze(seg, self.meta.task) {
            Ok(a) => render_alignment(&a.alignment),
            Err(e) => format!("(no alignment: {e})"),
        };
        let mut choices: Vec<Choice> = self.meta.task.labels().iter().map(|&l| Choice::Label(l)).collect();
        choices.push(Choice::Abstain);
        NextPayload::Pending(SegmentPayload {
            index: cursor,
            total: self.total(),
            segment_id: seg.id.clone(),
            ipa_transcription: seg.ipa_transcription.clone(),
            standard_german: seg.standard_german.clone(),
            alignment,
            choices,
        })
    }

    /// Records a decision durably. Repeating an existing decision is
    /// acknowledged again; a different one is a conflict.
    pub fn decide(&mut self, segment_id: &str, choice: Choice) -> Result<Ack, SessionError> {
        self.check(segment_id, choice)?;
        if let Some(&i) = self.decided.get(segment_id) {
            let existing = self.decisions[i].decision;
            if existing != choice {
                return Err(SessionError::Conflict {
                    segment: segment_id.to_string(),
                    existing,
                });
            }
            return Ok(self.ack(segment_id, choice, true));
        }
        let d = Decision {
            segment_id: segment_id.to_string(),
            decision: choice,
            at_ms: now_ms(),
        };
        let mut line = serde_json::to_string(&d).expect("decision serializes");
        line.push('\n');
        let path = self.dir.join(DECISIONS);
        self.log.write_all(line.as_bytes()).map_err(io_err(&path))?;
        self.log.sync_data().map_err(io_err(&path))?;
        self.push(d);
        Ok(self.ack(segment_id, choice, false))
    }

    fn ack(&self, segment_id: &str, decision: Choice, duplicate: bool) -> Ack {
        Ack {
            segment_id: segment_id.to_string(),
            decision,
            duplicate,
            cursor: self.cursor(),
            total: self.total(),
        }
    }

    /// Scores the decisions so far against the gold labels.
    pub fn report(&self) -> Result<SessionReport, SessionError> {
        if self.decisions.is_empty() {
            return Err(SessionError::Empty);
        }
        let task = self.meta.task;
        let records: Vec<PredictionRecord> = self
            .decisions
            .iter()
            .map(|d| PredictionRecord {
                segment_id: d.segment_id.clone(),
                task,
                source: PredictionSource::Human,
                run_id: self.meta.session_id.clone(),
                label: match d.decision {
                    Choice::Label(l) => Some(l),
                    Choice::Abstain => None,
                },
                scores: None,
                tie: false,
                abstained: d.decision == Choice::Abstain,
                error: None,
            })
            .collect();
        let golds: Vec<Segment> = self.segments.values().cloned().collect();
        let tally = confusion(&records, &golds, task).map_err(|e| SessionError::Corrupt {
            path: self.dir.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        let eval = metrics(&tally.matrix).ok().map(|mut r| {
            r.n = tally.records;
            r.abstained = tally.abstained_total() as usize;
            r
        });
        Ok(SessionReport {
            session_id: self.meta.session_id.clone(),
            task,
            partial: self.cursor() < self.total(),
            decided: self.decisions.len(),
            total: self.total(),
            eval,
            human: human_score(&tally),
        })
    }

    /// Gold label of a session segment; for tests and offline tooling only,
    /// never served.
    pub fn gold(&self, segment_id: &str) -> Option<Label> {
        self.segments.get(segment_id)?.gold(self.meta.task)
    }
}
