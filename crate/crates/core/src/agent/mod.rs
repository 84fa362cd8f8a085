//! The LLM pipelines: a single-prompt baseline and a node graph, over a
//! pluggable chat-completion backend.
//!
//! Prompt texts, node templates and attachments are data files under
//! `data/prompts`; the node sequence is a small TOML file (`data/graphs`).
//! Nodes answer with a fenced block:
//!
//! ````text
//! ```analysis
//! High: 0.3
//! Highest: 0.7
//! reasoning: full vowels in endings
//! final: Highest Alemannic
//! ```
//! ````

mod backend;
mod graph;
mod openai;
mod parse;
mod prompt;
mod runner;

pub use backend::{
    complete, BackendConfig, BackendError, ChatBackend, ChatMessage, ChatRequest, MockBackend, RecordingBackend,
    ReplayBackend,
};
pub use graph::{
    run_baseline, run_graph, run_graph_state, run_node, AgentConfig, AgentState, GraphConfig, NodeResult, NodeSpec,
};
pub use openai::OpenAiBackend;
pub use parse::{format_node_reply, output_format, parse_final_reply, parse_node_reply, NodeReply, ReplyError};
pub use prompt::{
    build_prompt, parse_user_query, render_ipa_chart, user_query, AttachmentKind, Attachments, PromptBundle, PromptSet,
    USER_MARKER,
};
pub use runner::{run_segments, Classifier};

pub use crate::prediction::{ClassScores, Prediction, PredictionSource};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("segment `{0}` lacks an IPA or Standard German transcription")]
    MissingTranscription(String),
    #[error("node {node}: {source}")]
    Backend {
        node: String,
        #[source]
        source: BackendError,
    },
    #[error("node {node}: unparseable reply after reformat request: {source}")]
    Parse {
        node: String,
        #[source]
        source: ReplyError,
    },
    #[error("template for node {node}: {message}")]
    Template { node: String, message: String },
    #[error("state slot `{0}` already written")]
    SlotWritten(String),
    #[error("agent config: {0}")]
    Config(String),
}
