use std::path::Path;

use alemannic::agent::{
    AgentConfig, ChatBackend, Classifier, GraphConfig, MockBackend, OpenAiBackend, PromptSet, RecordingBackend,
    ReplayBackend,
};
use alemannic::alignment::{reference_words, render_alignment, Aligner, GermanG2p};
use alemannic::dataset::{annotate, load_manifest, sample_splits, write_manifest, DatasetError, Segment, SplitName};
use alemannic::eval::{aggregate_runs, evaluate as score, render_report, EvalError};
use alemannic::features::{RuleEngine, RuleSet};
use alemannic::ipa::{tokenize, DistanceWeights, IpaChart};
use alemannic::{records_from_jsonl, records_to_jsonl, PredictionRecord, Task};
use alemannic_service::{ServiceConfig, ServiceError, Session, SessionError};

use crate::config::{BackendKind, Mode, RunConfig};
use crate::{AlignArgs, ClassifyArgs, CliError, EvaluateArgs, InitSessionArgs, PrepareSplitsArgs, ServeArgs};

const DEFAULT_CONCURRENCY: usize = 4;
const DEFAULT_SEED: u64 = 42;

fn dataset_err(e: DatasetError) -> CliError {
    match e {
        DatasetError::Config(_) | DatasetError::InvalidSpec(_) => CliError::Config(e.to_string()),
        _ => CliError::Data(e.to_string()),
    }
}

fn load_annotated(path: &Path, config: &RunConfig) -> Result<Vec<Segment>, CliError> {
    let mut segments = load_manifest(path).map_err(dataset_err)?;
    for seg in &mut segments {
        annotate(seg, &config.dataset);
    }
    Ok(segments)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn prepare_splits(args: PrepareSplitsArgs) -> Result<(), CliError> {
    let config = RunConfig::load(args.config.as_deref())?;
    let mut spec = config.dataset.split;
    if let Some(task) = args.task.or(config.task) {
        spec.task = task;
    }
    if let Some(seed) = args.seed.or(config.seed) {
        spec.seed = seed;
    }
    spec.train = args.train.unwrap_or(spec.train);
    spec.validation = args.validation.unwrap_or(spec.validation);
    spec.test = args.test.unwrap_or(spec.test);

    let manifest = load_annotated(&args.input, &config)?;
    let splits = sample_splits(&manifest, &spec, &config.dataset).map_err(dataset_err)?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;
    for name in [SplitName::Train, SplitName::Validation, SplitName::Test] {
        let path = args.out.join(format!("{name}.jsonl"));
        write_manifest(&path, splits.get(name)).map_err(dataset_err)?;
        log::info!("{}: {} segments", path.display(), splits.get(name).len());
    }
    eprintln!(
        "{} splits with seed {}: train {}, validation {}, test {}",
        spec.task,
        spec.seed,
        splits.train.len(),
        splits.validation.len(),
        splits.test.len()
    );
    Ok(())
}

fn live_backend(config: &RunConfig) -> Result<OpenAiBackend, CliError> {
    let var = &config.llm.api_key_env;
    match std::env::var(var) {
        Ok(key) if !key.is_empty() => Ok(OpenAiBackend::new(&config.llm, Some(key))),
        _ => Err(CliError::Config(format!("live backend needs an API key in ${var}"))),
    }
}

pub fn classify(args: ClassifyArgs) -> Result<(), CliError> {
    let mut config = RunConfig::load(args.config.as_deref())?;
    let task = args.task.or(config.task).unwrap_or(Task::Binary);
    let mode = args.mode.or(config.mode).unwrap_or(Mode::Rules);
    let kind = args.backend.or(config.backend).unwrap_or(BackendKind::Mock);
    let seed = args.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let concurrency = args.concurrency.or(config.concurrency).unwrap_or(DEFAULT_CONCURRENCY);
    if concurrency == 0 {
        return Err(CliError::Config("concurrency must be at least 1".into()));
    }
    let replay = args.replay.or(config.replay_file.take());
    let run_id = args.run_id.unwrap_or_else(|| {
        let mode = match mode {
            Mode::Rules => "rules",
            Mode::Baseline => "baseline",
            Mode::Agent => "agent",
        };
        format!("{mode}-{seed}")
    });

    let rules = match args.rules.or(config.rules.take()) {
        Some(path) => RuleSet::load(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => RuleSet::starter().clone(),
    };
    let segments = load_manifest(&args.input).map_err(dataset_err)?;

    let records = if mode == Mode::Rules {
        alemannic::agent::run_segments(
            &segments,
            task,
            Classifier::Rules(&rules),
            &AgentConfig::default(),
            concurrency,
            &run_id,
        )
    } else {
        let prompts = match args.prompts.or(config.prompts_dir.take()) {
            Some(dir) => PromptSet::load_dir(&dir).map_err(|e| CliError::Config(e.to_string()))?,
            None => PromptSet::bundled(),
        }
        .with_rules(rules.clone());
        let mut graph = match args.graph.or(config.graph.take()) {
            Some(path) => GraphConfig::load(&path).map_err(|e| CliError::Config(e.to_string()))?,
            None => GraphConfig::default(),
        };
        if args.no_ipa_charts {
            graph.ipa_charts = false;
        }
        let agent_config = AgentConfig {
            prompts,
            graph,
            backend: config.llm.clone(),
        };
        agent_config.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let backend: Box<dyn ChatBackend> = match kind {
            BackendKind::Mock => Box::new(MockBackend::new(RuleEngine::new(rules), task)),
            BackendKind::Replay => {
                let path = replay.ok_or_else(|| CliError::Config("replay backend needs --replay".into()))?;
                Box::new(ReplayBackend::load(&path).map_err(CliError::Data)?)
            }
            BackendKind::Live => Box::new(live_backend(&config)?),
            BackendKind::Record => {
                let path = replay.ok_or_else(|| CliError::Config("record backend needs --replay".into()))?;
                let live = live_backend(&config)?;
                Box::new(
                    RecordingBackend::new(live, &path)
                        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
                )
            }
        };
        let classifier = match mode {
            Mode::Baseline => Classifier::Baseline(backend.as_ref()),
            _ => Classifier::Agent(backend.as_ref()),
        };
        alemannic::agent::run_segments(&segments, task, classifier, &agent_config, concurrency, &run_id)
    };

    write_file(&args.out, &records_to_jsonl(&records))?;
    let errors = records.iter().filter(|r| r.is_error()).count();
    eprintln!(
        "{}: {} predictions, {errors} errors (run {run_id})",
        args.out.display(),
        records.len()
    );
    let first = records.iter().find_map(|r| r.error.as_deref());
    if let Some(first) = first {
        if errors == records.len() {
            return Err(CliError::Backend(format!("every segment failed; first error: {first}")));
        }
        eprintln!("first error: {first}");
    }
    Ok(())
}

fn load_records(path: &Path) -> Result<Vec<PredictionRecord>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    records_from_jsonl(&text).map_err(|(line, e)| CliError::Data(format!("{}:{line}: {e}", path.display())))
}

fn eval_err(path: &Path, e: EvalError) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

pub fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let config = RunConfig::load(args.config.as_deref())?;
    let golds = load_annotated(&args.gold, &config)?;
    let runs = args
        .predictions
        .iter()
        .map(|p| load_records(p))
        .collect::<Result<Vec<_>, _>>()?;
    let task = args
        .task
        .or(config.task)
        .or_else(|| runs.iter().flatten().next().map(|r| r.task))
        .unwrap_or(Task::Binary);

    let mut reports = Vec::new();
    for (path, records) in args.predictions.iter().zip(&runs) {
        let report = score(records, &golds, task).map_err(|e| eval_err(path, e))?;
        if runs.len() > 1 {
            println!("{}", path.display());
        }
        print!("{}", render_report(&report));
        if report.errors + report.abstained > 0 {
            println!(
                "({} of {} records not scored: {} errors, {} abstained)",
                report.errors + report.abstained,
                report.n,
                report.errors,
                report.abstained
            );
        }
        if runs.len() > 1 {
            println!();
        }
        reports.push(report);
    }
    let aggregate = if reports.len() > 1 {
        let agg = aggregate_runs(&reports).map_err(|e| CliError::Data(e.to_string()))?;
        println!(
            "{} runs: accuracy {:.1} ± {:.1}, macro-F1 {:.1} ± {:.1}",
            agg.runs, agg.mean_accuracy, agg.std_accuracy, agg.mean_macro_f1, agg.std_macro_f1
        );
        Some(agg)
    } else {
        None
    };
    if let Some(path) = &args.json {
        let doc = serde_json::json!({ "reports": reports, "aggregate": aggregate });
        let text = serde_json::to_string_pretty(&doc).expect("reports serialize");
        write_file(path, &(text + "\n"))?;
    }
    Ok(())
}

fn print_alignment(aligner: &Aligner<'_>, ipa: &str, german: &str) {
    let dialect = tokenize(ipa, IpaChart::bundled());
    let refs = reference_words(german, GermanG2p::bundled());
    let reference: Vec<String> = refs.iter().map(|w| w.ref_phones.to_text()).collect();
    println!("dialect   {}", dialect.to_text());
    println!("reference {}", reference.join(" "));
    let alignment = aligner.align(&dialect, &refs);
    if alignment.is_empty() {
        println!("(nothing to align)");
    } else {
        print!("{}", render_alignment(&alignment));
    }
}

pub fn align(args: AlignArgs) -> Result<(), CliError> {
    let aligner =
        Aligner::new(DistanceWeights::bundled(), args.gap_penalty).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(ipa) = &args.ipa {
        print_alignment(&aligner, ipa, args.german.as_deref().unwrap_or_default());
        return Ok(());
    }
    let Some(path) = &args.input else {
        return Err(CliError::Config(
            "give --ipa and --german, or --in with a manifest".into(),
        ));
    };
    let segments = load_manifest(path).map_err(dataset_err)?;
    let selected: Vec<&Segment> = match &args.id {
        Some(id) => {
            let seg = segments
                .iter()
                .find(|s| &s.id == id)
                .ok_or_else(|| CliError::Data(format!("no segment `{id}` in {}", path.display())))?;
            vec![seg]
        }
        None => segments.iter().collect(),
    };
    for (i, seg) in selected.iter().enumerate() {
        if i > 0 {
            println!();
        }
        println!("# {}", seg.id);
        print_alignment(&aligner, &seg.ipa_transcription, &seg.standard_german);
    }
    Ok(())
}

fn service_err(e: ServiceError) -> CliError {
    match e {
        ServiceError::Serve(_) => CliError::Data(e.to_string()),
        _ => CliError::Config(e.to_string()),
    }
}

pub fn serve(args: ServeArgs) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let mut cfg = ServiceConfig::parse(&text).map_err(service_err)?;
            let base = path.parent().unwrap_or(Path::new(""));
            if cfg.data_dir.is_relative() {
                cfg.data_dir = base.join(&cfg.data_dir);
            }
            if let Some(dir) = cfg.static_dir.as_mut().filter(|d| d.is_relative()) {
                *dir = base.join(&*dir);
            }
            cfg
        }
        None => {
            let dir = args
                .data_dir
                .clone()
                .ok_or_else(|| CliError::Config("give --data-dir or --config".into()))?;
            ServiceConfig::new(dir)
        }
    };
    if let Some(dir) = args.data_dir {
        config.data_dir = dir;
    }
    if let Some(bind) = args.bind {
        config.bind = bind;
    }
    if let Some(dir) = args.static_dir {
        config.static_dir = Some(dir);
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Config(format!("tokio runtime: {e}")))?;
    runtime.block_on(alemannic_service::serve(config)).map_err(service_err)
}

pub fn init_session(args: InitSessionArgs) -> Result<(), CliError> {
    let config = RunConfig::load(args.config.as_deref())?;
    let manifest = load_manifest(&args.input).map_err(dataset_err)?;
    let session = Session::create(
        &args.data_dir,
        &args.id,
        &manifest,
        args.task,
        args.seed,
        &config.dataset,
    )
    .map_err(|e| match e {
        SessionError::InvalidId(_) | SessionError::Exists(_) => CliError::Config(e.to_string()),
        _ => CliError::Data(e.to_string()),
    })?;
    println!(
        "session {} ({}, {} segments) in {}",
        session.id(),
        args.task,
        session.total(),
        session.dir().display()
    );
    Ok(())
}
