use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::backend::ChatMessage;
use super::AgentError;
use crate::dataset::Segment;
use crate::features::RuleSet;
use crate::ipa::{FeatureBundle, IpaChart};
use crate::Task;

/// Marker that opens the user query.
pub const USER_MARKER: &str = "[USER]";

const BASE: &str = include_str!("../../data/prompts/base.txt");
const TASK_BINARY: &str = include_str!("../../data/prompts/task_binary.txt");
const TASK_EIGHT: &str = include_str!("../../data/prompts/task_eight.txt");
const NODE_VOWEL_CONSONANT: &str = include_str!("../../data/prompts/nodes/vowel_consonant.txt");
const NODE_SPECIALIZED: &str = include_str!("../../data/prompts/nodes/specialized_features.txt");
const PLAIN_ENGLISH: &str = include_str!("../../data/prompts/attachments/plain_english.md");
const HISTORICAL_VOWELS: &str = include_str!("../../data/prompts/attachments/historical_vowels.md");
const SAMPLE_EVALUATION: &str = include_str!("../../data/prompts/attachments/sample_evaluation.md");

/// Placeholders a node template may use.
pub const PLACEHOLDERS: &[&str] = &["labels", "output_format", "vowel_analysis", "dialect_features_analysis"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttachmentKind {
    FeatureDescriptions,
    PlainEnglish,
    HistoricalVowels,
    IpaCharts,
    SampleEvaluation,
}

impl AttachmentKind {
    pub const ALL: [AttachmentKind; 5] = [
        AttachmentKind::FeatureDescriptions,
        AttachmentKind::PlainEnglish,
        AttachmentKind::HistoricalVowels,
        AttachmentKind::IpaCharts,
        AttachmentKind::SampleEvaluation,
    ];

    pub fn title(self) -> &'static str {
        match self {
            AttachmentKind::FeatureDescriptions => "Dialect features",
            AttachmentKind::PlainEnglish => "Explanation",
            AttachmentKind::HistoricalVowels => "Historical vowels",
            AttachmentKind::IpaCharts => "IPA charts",
            AttachmentKind::SampleEvaluation => "Sample evaluation",
        }
    }
}

/// Which linguistic attachments go into a prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attachments {
    /// Base prompt only.
    None,
    All,
    /// Everything except the IPA charts.
    WithoutIpaCharts,
}

impl Attachments {
    fn includes(self, kind: AttachmentKind) -> bool {
        match self {
            Attachments::None => false,
            Attachments::All => true,
            Attachments::WithoutIpaCharts => kind != AttachmentKind::IpaCharts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub attachments: Vec<(String, String)>,
    pub user_query: String,
}

impl PromptBundle {
    /// System prompt (plus `instruction`, if any), one system message per
    /// attachment, then the user query.
    pub fn messages(&self, instruction: Option<&str>) -> Vec<ChatMessage> {
        let mut system = self.system_prompt.clone();
        if let Some(extra) = instruction {
            system.push_str("\n\n");
            system.push_str(extra);
        }
        let mut out = vec![ChatMessage::system(system)];
        for (title, text) in &self.attachments {
            out.push(ChatMessage::system(format!("## {title}\n\n{text}")));
        }
        out.push(ChatMessage::user(self.user_query.clone()));
        out
    }
}

// Leading '#' lines are file comments, not prompt text.
fn strip_comments(text: &str) -> String {
    let body: Vec<&str> = text.lines().skip_while(|l| l.starts_with('#')).collect();
    body.join("\n").trim().to_string()
}

/// Prompt texts: base prompt, task parts, node templates and attachments.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSet {
    pub base: String,
    pub task_binary: String,
    pub task_eight: String,
    pub node_templates: BTreeMap<String, String>,
    attachments: BTreeMap<AttachmentKind, String>,
    rules: RuleSet,
}

impl PromptSet {
    /// The prompt files shipped with the crate and the starter ruleset.
    pub fn bundled() -> Self {
        let mut node_templates = BTreeMap::new();
        node_templates.insert("vowel_consonant".to_string(), strip_comments(NODE_VOWEL_CONSONANT));
        node_templates.insert("specialized_features".to_string(), strip_comments(NODE_SPECIALIZED));
        let mut attachments = BTreeMap::new();
        attachments.insert(AttachmentKind::PlainEnglish, strip_comments(PLAIN_ENGLISH));
        attachments.insert(AttachmentKind::HistoricalVowels, strip_comments(HISTORICAL_VOWELS));
        attachments.insert(AttachmentKind::SampleEvaluation, strip_comments(SAMPLE_EVALUATION));
        attachments.insert(AttachmentKind::IpaCharts, render_ipa_chart(IpaChart::bundled()));
        PromptSet {
            base: BASE.trim().to_string(),
            task_binary: TASK_BINARY.trim().to_string(),
            task_eight: TASK_EIGHT.trim().to_string(),
            node_templates,
            attachments,
            rules: RuleSet::starter().clone(),
        }
    }

    /// Reads overrides from a directory laid out like `data/prompts`; files
    /// that are absent keep their bundled text.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, AgentError> {
        let dir = dir.as_ref();
        let mut set = PromptSet::bundled();
        let read = |rel: &str| -> Result<Option<String>, AgentError> {
            let path = dir.join(rel);
            match std::fs::read_to_string(&path) {
                Ok(text) => Ok(Some(strip_comments(&text))),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(AgentError::Config(format!("{}: {e}", path.display()))),
            }
        };
        if let Some(t) = read("base.txt")? {
            set.base = t;
        }
        if let Some(t) = read("task_binary.txt")? {
            set.task_binary = t;
        }
        if let Some(t) = read("task_eight.txt")? {
            set.task_eight = t;
        }
        if let Ok(entries) = std::fs::read_dir(dir.join("nodes")) {
            for entry in entries.flatten() {
                let path = entry.path();
                if path.extension().is_some_and(|e| e == "txt") {
                    let id = path.file_stem().unwrap().to_string_lossy().into_owned();
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| AgentError::Config(format!("{}: {e}", path.display())))?;
                    set.node_templates.insert(id, strip_comments(&text));
                }
            }
        }
        for (kind, file) in [
            (AttachmentKind::PlainEnglish, "attachments/plain_english.md"),
            (AttachmentKind::HistoricalVowels, "attachments/historical_vowels.md"),
            (AttachmentKind::SampleEvaluation, "attachments/sample_evaluation.md"),
        ] {
            if let Some(t) = read(file)? {
                set.attachments.insert(kind, t);
            }
        }
        set.validate()?;
        Ok(set)
    }

    pub fn with_rules(mut self, rules: RuleSet) -> Self {
        self.rules = rules;
        self
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    /// Checks that every node template uses only known placeholders and
    /// contains `{output_format}`.
    pub fn validate(&self) -> Result<(), AgentError> {
        for (id, template) in &self.node_templates {
            let names = placeholders(template).map_err(|m| AgentError::Template {
                node: id.clone(),
                message: m,
            })?;
            if let Some(bad) = names.iter().find(|n| !PLACEHOLDERS.contains(&n.as_str())) {
                return Err(AgentError::Template {
                    node: id.clone(),
                    message: format!("unknown placeholder {{{bad}}}"),
                });
            }
            if !names.iter().any(|n| n == "output_format") {
                return Err(AgentError::Template {
                    node: id.clone(),
                    message: "missing {output_format}".into(),
                });
            }
        }
        Ok(())
    }

    pub fn system_prompt(&self, task: Task) -> String {
        let part = match task {
            Task::Binary => &self.task_binary,
            Task::Eight => &self.task_eight,
        };
        format!("{} {}", self.base, part)
    }

    pub fn attachment(&self, kind: AttachmentKind, task: Task) -> String {
        match kind {
            AttachmentKind::FeatureDescriptions => self.rules.describe(task),
            other => self.attachments.get(&other).cloned().unwrap_or_default(),
        }
    }
}

/// Names of the `{placeholder}`s in a template.
pub(crate) fn placeholders(template: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or("unclosed `{`")?;
        out.push(after[..close].to_string());
        rest = &after[close + 1..];
    }
    Ok(out)
}

/// Replaces `{name}` with its value; every placeholder must have one.
pub(crate) fn fill(template: &str, values: &BTreeMap<&str, String>) -> Result<String, String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or("unclosed `{`")?;
        let name = &after[..close];
        let value = values.get(name).ok_or_else(|| format!("no value for {{{name}}}"))?;
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// The user query: the marker, then the IPA transcription and the Standard
/// German sentence on their own lines.
pub fn user_query(ipa: &str, standard_german: &str) -> String {
    format!(
        "{USER_MARKER}\nIPA: {}\nStandard German: {}",
        ipa.trim(),
        standard_german.trim()
    )
}

/// Inverse of [`user_query`]: the IPA and Standard German lines of a query.
pub fn parse_user_query(text: &str) -> Option<(String, String)> {
    let body = &text[text.find(USER_MARKER)? + USER_MARKER.len()..];
    let mut ipa = None;
    let mut german = None;
    for line in body.lines() {
        if let Some(v) = line.strip_prefix("IPA:") {
            ipa = Some(v.trim().to_string());
        } else if let Some(v) = line.strip_prefix("Standard German:") {
            german = Some(v.trim().to_string());
        }
    }
    Some((ipa?, german?))
}

pub fn build_prompt(
    task: Task,
    attachments: Attachments,
    seg: &Segment,
    prompts: &PromptSet,
) -> Result<PromptBundle, AgentError> {
    if !seg.has_transcriptions() {
        return Err(AgentError::MissingTranscription(seg.id.clone()));
    }
    let attachments = AttachmentKind::ALL
        .into_iter()
        .filter(|&k| attachments.includes(k))
        .map(|k| (k.title().to_string(), prompts.attachment(k, task)))
        .collect();
    Ok(PromptBundle {
        system_prompt: prompts.system_prompt(task),
        attachments,
        user_query: user_query(&seg.ipa_transcription, &seg.standard_german),
    })
}

/// Plain-text vowel and consonant charts listing each symbol's features.
pub fn render_ipa_chart(chart: &IpaChart) -> String {
    let mut vowels = String::from("Vowels (symbol: height, backness, rounding)\n");
    let mut consonants = String::from("Consonants (symbol: place, manner, voicing)\n");
    for sym in chart.symbols() {
        match chart.get(sym) {
            Some(FeatureBundle::Vowel(v)) => {
                let rounding = if v.rounded { "rounded" } else { "unrounded" };
                writeln!(vowels, "{sym}: {}, {}, {rounding}", v.height, v.backness).unwrap();
            }
            Some(FeatureBundle::Consonant(c)) => {
                let voicing = if c.voiced { "voiced" } else { "voiceless" };
                writeln!(consonants, "{sym}: {}, {}, {voicing}", c.place, c.manner).unwrap();
            }
            None => {}
        }
    }
    format!("{vowels}\n{consonants}").trim_end().to_string()
}
