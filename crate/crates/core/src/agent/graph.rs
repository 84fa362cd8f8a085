use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::backend::{complete, BackendConfig, ChatBackend, ChatMessage};
use super::parse::{output_format, parse_final_reply, parse_node_reply, ReplyError};
use super::prompt::{build_prompt, fill, Attachments, PromptSet};
use super::AgentError;
use crate::dataset::Segment;
use crate::prediction::{ClassScores, Prediction, PredictionSource};
use crate::{Label, Task};

const DEFAULT_GRAPH: &str = include_str!("../../data/graphs/two_node.toml");

/// One node of the agent graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    /// Name of the node template in the prompt set; defaults to `id`.
    #[serde(default)]
    pub template: Option<String>,
}

impl NodeSpec {
    pub fn template_name(&self) -> &str {
        self.template.as_deref().unwrap_or(&self.id)
    }
}

/// Node sequence plus attachment options. Nodes run in order; the last
/// node's final line gives the label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    /// Include the IPA chart attachment in node prompts.
    #[serde(default = "yes")]
    pub ipa_charts: bool,
    #[serde(rename = "node")]
    pub nodes: Vec<NodeSpec>,
}

fn yes() -> bool {
    true
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig::parse(DEFAULT_GRAPH).expect("bundled graph is valid")
    }
}

impl GraphConfig {
    pub fn parse(text: &str) -> Result<Self, AgentError> {
        let cfg: GraphConfig = toml::from_str(text).map_err(|e| AgentError::Config(e.to_string()))?;
        if cfg.nodes.is_empty() {
            return Err(AgentError::Config("graph has no nodes".into()));
        }
        let mut ids: Vec<&str> = cfg.nodes.iter().map(|n| n.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(AgentError::Config(format!("duplicate node id `{}`", w[0])));
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AgentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AgentError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn attachments(&self) -> Attachments {
        if self.ipa_charts {
            Attachments::All
        } else {
            Attachments::WithoutIpaCharts
        }
    }
}

/// Everything a run needs besides the backend.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub prompts: PromptSet,
    pub graph: GraphConfig,
    pub backend: BackendConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            prompts: PromptSet::bundled(),
            graph: GraphConfig::default(),
            backend: BackendConfig::default(),
        }
    }
}

impl AgentConfig {
    /// Checks that every graph node has a template.
    pub fn validate(&self) -> Result<(), AgentError> {
        self.prompts.validate()?;
        for node in &self.graph.nodes {
            if !self.prompts.node_templates.contains_key(node.template_name()) {
                return Err(AgentError::Config(format!(
                    "node `{}` uses unknown template `{}`",
                    node.id,
                    node.template_name()
                )));
            }
        }
        self.backend.validate().map_err(AgentError::Config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeResult {
    pub node_id: String,
    pub class_confidences: ClassScores,
    pub reasoning: String,
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_label: Option<Label>,
}

impl NodeResult {
    /// Text embedded into later node prompts.
    pub fn summary(&self) -> String {
        let conf: Vec<String> = self
            .class_confidences
            .iter()
            .map(|(l, p)| format!("{}: {p:.2}", l.code()))
            .collect();
        format!("Confidences: {}\nReasoning: {}", conf.join(", "), self.reasoning)
    }
}

/// State threaded through the graph. Each slot is written once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub audio_filename: Option<String>,
    pub asr_transcription: String,
    pub standard_german: String,
    vowel_analysis: Option<NodeResult>,
    dialect_features_analysis: Option<NodeResult>,
    /// Results of nodes other than the two named ones.
    extra: BTreeMap<String, NodeResult>,
    final_prediction: Option<Prediction>,
}

impl AgentState {
    pub fn new(seg: &Segment) -> Self {
        AgentState {
            audio_filename: seg.audio_path.clone(),
            asr_transcription: seg.ipa_transcription.clone(),
            standard_german: seg.standard_german.clone(),
            vowel_analysis: None,
            dialect_features_analysis: None,
            extra: BTreeMap::new(),
            final_prediction: None,
        }
    }

    pub fn vowel_analysis(&self) -> Option<&NodeResult> {
        self.vowel_analysis.as_ref()
    }

    pub fn dialect_features_analysis(&self) -> Option<&NodeResult> {
        self.dialect_features_analysis.as_ref()
    }

    pub fn extra(&self, node_id: &str) -> Option<&NodeResult> {
        self.extra.get(node_id)
    }

    pub fn final_prediction(&self) -> Option<&Prediction> {
        self.final_prediction.as_ref()
    }

    /// Stores a node result in the slot belonging to its node.
    pub fn record(&mut self, result: NodeResult) -> Result<(), AgentError> {
        let id = result.node_id.clone();
        let slot = match id.as_str() {
            "vowel_consonant" => &mut self.vowel_analysis,
            "specialized_features" => &mut self.dialect_features_analysis,
            _ => {
                if self.extra.contains_key(&id) {
                    return Err(AgentError::SlotWritten(id));
                }
                self.extra.insert(id, result);
                return Ok(());
            }
        };
        if slot.is_some() {
            return Err(AgentError::SlotWritten(id));
        }
        *slot = Some(result);
        Ok(())
    }

    pub fn set_final(&mut self, prediction: Prediction) -> Result<(), AgentError> {
        if self.final_prediction.is_some() {
            return Err(AgentError::SlotWritten("final_prediction".into()));
        }
        self.final_prediction = Some(prediction);
        Ok(())
    }
}

fn reformat_request(task: Task) -> String {
    format!(
        "Your reply could not be read. Answer again using exactly this format and nothing else:\n{}",
        output_format(task)
    )
}

/// Runs one node: builds its prompt from the state, calls the backend and
/// parses the structured reply, asking once for a reformatted reply if the
/// first cannot be parsed.
pub fn run_node(
    node: &NodeSpec,
    state: &AgentState,
    seg: &Segment,
    task: Task,
    backend: &dyn ChatBackend,
    config: &AgentConfig,
    need_final: bool,
) -> Result<NodeResult, AgentError> {
    let template = config
        .prompts
        .node_templates
        .get(node.template_name())
        .ok_or_else(|| AgentError::Config(format!("unknown template `{}`", node.template_name())))?;
    let unavailable = || "No earlier analysis is available.".to_string();
    let labels: Vec<String> = task.labels().iter().map(|l| l.reply_form()).collect();
    let mut values = BTreeMap::new();
    values.insert("labels", labels.join(", "));
    values.insert("output_format", output_format(task));
    values.insert(
        "vowel_analysis",
        state.vowel_analysis().map_or_else(unavailable, NodeResult::summary),
    );
    values.insert(
        "dialect_features_analysis",
        state
            .dialect_features_analysis()
            .map_or_else(unavailable, NodeResult::summary),
    );
    let instruction = fill(template, &values).map_err(|message| AgentError::Template {
        node: node.id.clone(),
        message,
    })?;
    let bundle = build_prompt(task, config.graph.attachments(), seg, &config.prompts)?;
    let mut messages = bundle.messages(Some(&instruction));
    let backend_err = |source| AgentError::Backend {
        node: node.id.clone(),
        source,
    };

    let first = complete(backend, &config.backend.request(messages.clone()), &config.backend).map_err(backend_err)?;
    let (raw, reply) = match parse_node_reply(&first, task, need_final) {
        Ok(reply) => (first, reply),
        Err(first_err) => {
            log::debug!("node {} reply unparseable ({first_err}); asking to reformat", node.id);
            messages.push(ChatMessage::assistant(first));
            messages.push(ChatMessage::user(reformat_request(task)));
            let second = complete(backend, &config.backend.request(messages), &config.backend).map_err(backend_err)?;
            let reply = parse_node_reply(&second, task, need_final).map_err(|source| AgentError::Parse {
                node: node.id.clone(),
                source,
            })?;
            (second, reply)
        }
    };
    Ok(NodeResult {
        node_id: node.id.clone(),
        class_confidences: reply.confidences,
        reasoning: reply.reasoning,
        raw_response: raw,
        final_label: reply.final_label,
    })
}

/// Runs every node in order and returns the final state. The last node's
/// final line gives the label; its confidences become the class scores.
pub fn run_graph_state(
    seg: &Segment,
    task: Task,
    backend: &dyn ChatBackend,
    config: &AgentConfig,
) -> Result<AgentState, AgentError> {
    if !seg.has_transcriptions() {
        return Err(AgentError::MissingTranscription(seg.id.clone()));
    }
    let mut state = AgentState::new(seg);
    let last = config.graph.nodes.len() - 1;
    let mut final_node = None;
    for (i, node) in config.graph.nodes.iter().enumerate() {
        let result = run_node(node, &state, seg, task, backend, config, i == last)?;
        if i == last {
            final_node = Some(result.clone());
        }
        state.record(result)?;
    }
    let result = final_node.expect("graph has at least one node");
    let label = result.final_label.expect("final node reply carries a label");
    let tie = {
        let (top, tie) = result.class_confidences.argmax();
        tie && top == label
    };
    state.set_final(Prediction {
        segment_id: seg.id.clone(),
        task,
        label: Some(label),
        class_scores: Some(result.class_confidences),
        abstained: false,
        tie,
        run_id: String::new(),
        source: PredictionSource::Agent,
    })?;
    Ok(state)
}

pub fn run_graph(
    seg: &Segment,
    task: Task,
    backend: &dyn ChatBackend,
    config: &AgentConfig,
) -> Result<Prediction, AgentError> {
    let state = run_graph_state(seg, task, backend, config)?;
    Ok(state.final_prediction.expect("set by run_graph_state"))
}

/// Single completion with the base prompt only.
pub fn run_baseline(
    seg: &Segment,
    task: Task,
    backend: &dyn ChatBackend,
    config: &AgentConfig,
) -> Result<Prediction, AgentError> {
    let bundle = build_prompt(task, Attachments::None, seg, &config.prompts)?;
    let mut messages = bundle.messages(None);
    let backend_err = |source| AgentError::Backend {
        node: "baseline".into(),
        source,
    };
    let first = complete(backend, &config.backend.request(messages.clone()), &config.backend).map_err(backend_err)?;
    let label = match parse_final_reply(&first, task) {
        Ok(label) => label,
        Err(_) => {
            let choices: Vec<String> = task.labels().iter().map(|l| l.reply_form()).collect();
            messages.push(ChatMessage::assistant(first));
            messages.push(ChatMessage::user(format!(
                "Reply with only one of: {}.",
                choices.join(", ")
            )));
            let second = complete(backend, &config.backend.request(messages), &config.backend).map_err(backend_err)?;
            parse_final_reply(&second, task).map_err(|source: ReplyError| AgentError::Parse {
                node: "baseline".into(),
                source,
            })?
        }
    };
    Ok(Prediction {
        segment_id: seg.id.clone(),
        task,
        label: Some(label),
        class_scores: None,
        abstained: false,
        tie: false,
        run_id: String::new(),
        source: PredictionSource::Baseline,
    })
}
