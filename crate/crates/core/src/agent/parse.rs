use std::collections::BTreeMap;

use crate::prediction::ClassScores;
use crate::{Label, Task};

/// Why a model reply could not be read.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplyError {
    #[error("no label found in reply")]
    NoLabel,
    #[error("conflicting labels on the final line: {0}")]
    Conflicting(String),
    #[error("no ```analysis block in reply")]
    NoBlock,
    #[error("analysis block: {0}")]
    Block(String),
}

// Full names for eight-class labels, as single lowercase tokens.
const EIGHT_NAMES: &[(&str, Label)] = &[
    ("aargau", Label::Ag),
    ("bern", Label::Be),
    ("berne", Label::Be),
    ("basel", Label::Bs),
    ("grisons", Label::Gr),
    ("graubünden", Label::Gr),
    ("graubunden", Label::Gr),
    ("lucerne", Label::Lu),
    ("luzern", Label::Lu),
    ("gallen", Label::Sg),
    ("valais", Label::Vs),
    ("wallis", Label::Vs),
    ("zürich", Label::Zh),
    ("zurich", Label::Zh),
];

fn tokens(line: &str) -> Vec<String> {
    line.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn labels_in_line(line: &str, task: Task) -> Vec<Label> {
    let toks = tokens(line);
    let mut found = Vec::new();
    match task {
        Task::Binary => {
            for pair in toks.windows(2) {
                if pair[1] == "alemannic" {
                    match pair[0].as_str() {
                        "high" => found.push(Label::High),
                        "highest" => found.push(Label::Highest),
                        _ => {}
                    }
                }
            }
        }
        Task::Eight => {
            for t in &toks {
                if let Some(l) = task.labels().iter().find(|l| l.code().eq_ignore_ascii_case(t)) {
                    found.push(*l);
                } else if let Some((_, l)) = EIGHT_NAMES.iter().find(|(n, _)| n == t) {
                    found.push(*l);
                }
            }
        }
    }
    found
}

/// Reads the final answer of a reply: the last line that names a label.
/// Binary replies must use the region names (`High Alemannic`, `Highest
/// Alemannic`); eight-class replies may use the two-letter codes or the
/// canton names. Case and punctuation are ignored. A final line naming two
/// different labels is an error.
pub fn parse_final_reply(text: &str, task: Task) -> Result<Label, ReplyError> {
    for line in text.lines().rev() {
        let mut found = labels_in_line(line, task);
        if found.is_empty() {
            continue;
        }
        found.dedup();
        let first = found[0];
        if found.iter().any(|&l| l != first) {
            let mut names: Vec<&str> = found.iter().map(|l| l.code()).collect();
            names.sort_unstable();
            names.dedup();
            return Err(ReplyError::Conflicting(names.join(", ")));
        }
        return Ok(first);
    }
    Err(ReplyError::NoLabel)
}

/// Contents of a node's structured reply.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeReply {
    pub confidences: ClassScores,
    pub reasoning: String,
    pub final_label: Option<Label>,
}

/// The block a node must answer with, for `task`.
pub fn output_format(task: Task) -> String {
    let mut out = String::from("```analysis\n");
    for l in task.labels() {
        out.push_str(&format!("{}: <confidence between 0 and 1>\n", l.code()));
    }
    out.push_str("reasoning: <brief reasoning>\n");
    let choices: Vec<String> = task.labels().iter().map(|l| l.reply_form()).collect();
    out.push_str(&format!("final: <one of {}>\n```", choices.join(", ")));
    out
}

/// Renders a reply in the [`output_format`]; used by the mock backend.
pub fn format_node_reply(scores: &ClassScores, reasoning: &str, final_label: Label) -> String {
    let mut out = String::from("```analysis\n");
    for (l, p) in scores.iter() {
        out.push_str(&format!("{}: {p}\n", l.code()));
    }
    out.push_str(&format!("reasoning: {}\n", reasoning.replace('\n', " ")));
    out.push_str(&format!("final: {}\n```\n", final_label.reply_form()));
    out
}

fn last_block(text: &str) -> Option<&str> {
    let start = text.rfind("```analysis")?;
    let body = &text[start + "```analysis".len()..];
    let end = body.find("```").unwrap_or(body.len());
    Some(&body[..end])
}

/// Parses the last ```analysis block of a node reply. Every class of the
/// task needs a confidence; values may be fractions or percentages and are
/// normalized. `final` is required when `need_final` is set.
pub fn parse_node_reply(text: &str, task: Task, need_final: bool) -> Result<NodeReply, ReplyError> {
    let block = last_block(text).ok_or(ReplyError::NoBlock)?;
    let mut conf: BTreeMap<Label, f64> = BTreeMap::new();
    let mut reasoning: Vec<String> = Vec::new();
    let mut final_label = None;
    let mut in_reasoning = false;
    for raw in block.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once(':') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => ("", line),
        };
        if key.eq_ignore_ascii_case("reasoning") {
            reasoning.push(value.to_string());
            in_reasoning = true;
        } else if key.eq_ignore_ascii_case("final") {
            final_label = Some(parse_final_reply(value, task).map_err(|e| ReplyError::Block(format!("final: {e}")))?);
            in_reasoning = false;
        } else if let Some(label) = key.parse::<Label>().ok().filter(|l| task.contains(*l)) {
            let number = value.trim_end_matches('%').trim();
            let mut v: f64 = number.parse().map_err(|_| {
                ReplyError::Block(format!("confidence for {} is not a number: `{value}`", label.code()))
            })?;
            if value.ends_with('%') {
                v /= 100.0;
            }
            if !v.is_finite() || v < 0.0 {
                return Err(ReplyError::Block(format!(
                    "confidence for {} out of range",
                    label.code()
                )));
            }
            conf.insert(label, v);
            in_reasoning = false;
        } else if in_reasoning {
            reasoning.push(line.to_string());
        } else {
            return Err(ReplyError::Block(format!("unexpected line `{line}`")));
        }
    }
    let missing: Vec<&str> = task
        .labels()
        .iter()
        .filter(|l| !conf.contains_key(l))
        .map(|l| l.code())
        .collect();
    if !missing.is_empty() {
        return Err(ReplyError::Block(format!(
            "missing confidence for {}",
            missing.join(", ")
        )));
    }
    if need_final && final_label.is_none() {
        return Err(ReplyError::Block("missing final line".into()));
    }
    let confidences = ClassScores::from_map(task, &conf).map_err(ReplyError::Block)?;
    Ok(NodeReply {
        confidences,
        reasoning: reasoning.join(" "),
        final_label,
    })
}
