use std::path::{Path, PathBuf};

use alemannic::agent::BackendConfig;
use alemannic::dataset::DatasetConfig;
use alemannic::Task;
use clap::ValueEnum;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rules,
    Baseline,
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    /// Answers from the rule engine; no network.
    Mock,
    /// Answers from a recorded replay file.
    Replay,
    /// Calls the configured endpoint.
    Live,
    /// Calls the endpoint and appends every exchange to the replay file.
    Record,
}

/// Run settings file. Relative paths resolve against the file's directory.
///
/// ```toml
/// task = "binary"
/// mode = "agent"
/// backend = "replay"
/// replay_file = "runs/agent-1.replay.jsonl"
/// concurrency = 4
/// seed = 42
/// graph = "graphs/two_node.toml"
/// prompts_dir = "prompts"
/// rules = "rules/starter.toml"
///
/// [llm]
/// model = "gpt-4o-mini"
/// timeout_secs = 120
///
/// [dataset]
/// innerschweiz_highest_cantons = ["Uri", "Obwalden", "Nidwalden"]
/// ```
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Option<Task>,
    pub mode: Option<Mode>,
    pub backend: Option<BackendKind>,
    pub replay_file: Option<PathBuf>,
    pub concurrency: Option<usize>,
    pub seed: Option<u64>,
    pub graph: Option<PathBuf>,
    pub prompts_dir: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub llm: BackendConfig,
    pub dataset: DatasetConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.replay_file,
            &mut cfg.graph,
            &mut cfg.prompts_dir,
            &mut cfg.rules,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.dataset
            .validate()
            .map_err(|e| CliError::Config(format!("{}: [dataset] {e}", path.display())))?;
        cfg.llm
            .validate()
            .map_err(|e| CliError::Config(format!("{}: [llm] {e}", path.display())))?;
        Ok(cfg)
    }
}
