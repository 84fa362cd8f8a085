use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use alemannic::agent::{
    build_prompt, format_node_reply, parse_final_reply, parse_node_reply, run_baseline, run_graph, run_graph_state,
    run_segments, AgentConfig, Attachments, BackendConfig, BackendError, ChatBackend, ChatRequest, Classifier,
    MockBackend, OpenAiBackend, PromptSet, RecordingBackend, ReplayBackend,
};
use alemannic::dataset::{load_manifest, Segment};
use alemannic::features::{classify_rules, RuleEngine, RuleSet};
use alemannic::{records_to_jsonl, ClassScores, Label, Task};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn binary_80() -> Vec<Segment> {
    load_manifest(fixture("binary_test_80.jsonl")).unwrap()
}

fn check_golden(name: &str, got: &str) {
    let path = fixture(name);
    if std::env::var_os("BLESS").is_some() {
        std::fs::write(&path, got).unwrap();
    }
    let want = std::fs::read_to_string(&path).expect("golden file; run with BLESS=1 to create");
    assert_eq!(got, want, "{name}");
}

#[test]
fn prompts_carry_the_base_phrases() {
    let prompts = PromptSet::bundled();
    let seg = &binary_80()[0];
    let binary = build_prompt(Task::Binary, Attachments::All, seg, &prompts).unwrap();
    let eight = build_prompt(Task::Eight, Attachments::All, seg, &prompts).unwrap();
    assert!(binary.system_prompt.contains("High Alemannic, Highest Alemannic"));
    assert!(eight.system_prompt.contains("(ag, be, bs, gr, lu, sg, vs, zh)"));
    for bundle in [&binary, &eight] {
        assert!(bundle
            .system_prompt
            .starts_with("You are now a linguist who needs to identify dialects"));
        assert!(bundle.user_query.contains(&seg.ipa_transcription));
        assert!(bundle.user_query.contains(&seg.standard_german));
        assert_eq!(bundle.attachments.len(), 5);
    }
    let none = build_prompt(Task::Binary, Attachments::None, seg, &prompts).unwrap();
    assert!(none.attachments.is_empty());
    assert_eq!(none.messages(None).len(), 2);
}

#[test]
fn final_replies_round_trip_every_label() {
    for task in [Task::Binary, Task::Eight] {
        for &label in task.labels() {
            let reply = label.reply_form();
            assert_eq!(parse_final_reply(&reply, task).unwrap(), label, "{reply}");
            let wrapped = format!("Looking at the endings.\nFinal answer: {reply}.");
            assert_eq!(parse_final_reply(&wrapped, task).unwrap(), label, "{wrapped}");
        }
    }
    assert_eq!(
        parse_final_reply("Highest Alemannic", Task::Binary).unwrap(),
        Label::Highest
    );
    assert_eq!(parse_final_reply("high alemannic", Task::Binary).unwrap(), Label::High);
    assert!(parse_final_reply("no idea", Task::Binary).is_err());
}

#[test]
fn node_replies_round_trip() {
    for task in [Task::Binary, Task::Eight] {
        let weights: Vec<f64> = (0..task.class_count()).map(|i| i as f64 * 0.3).collect();
        let scores = ClassScores::from_weights(task, &weights).unwrap();
        let last = *task.labels().last().unwrap();
        let text = format_node_reply(&scores, "ending vowels", last);
        let reply = parse_node_reply(&text, task, true).unwrap();
        assert_eq!(reply.confidences, scores);
        assert_eq!(reply.final_label, Some(last));
        assert_eq!(reply.reasoning, "ending vowels");
    }
}

#[test]
fn mock_agent_agrees_with_rules() {
    let segs = binary_80();
    let config = AgentConfig::default();
    let mock = MockBackend::new(RuleEngine::starter(), Task::Binary);
    let start = Instant::now();
    for seg in &segs {
        let agent = run_graph(seg, Task::Binary, &mock, &config).unwrap();
        let rules = classify_rules(seg, RuleSet::starter(), Task::Binary).unwrap();
        assert_eq!(agent.label, rules.label, "{}", seg.id);
        assert_eq!(agent.class_scores, rules.class_scores, "{}", seg.id);
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn graph_state_fills_both_slots() {
    let seg = &binary_80()[0];
    let mock = MockBackend::new(RuleEngine::starter(), Task::Binary);
    let state = run_graph_state(seg, Task::Binary, &mock, &AgentConfig::default()).unwrap();
    assert!(state.vowel_analysis().is_some());
    let last = state.dialect_features_analysis().unwrap();
    assert_eq!(last.final_label, state.final_prediction().unwrap().label);
}

#[test]
fn mock_runs_match_golden() {
    let segs = binary_80();
    let config = AgentConfig::default();
    let mock = MockBackend::new(RuleEngine::starter(), Task::Binary);
    let agent = run_segments(&segs, Task::Binary, Classifier::Agent(&mock), &config, 4, "mock-1");
    assert_eq!(agent.len(), 80);
    assert!(agent.iter().all(|r| !r.is_error()));
    check_golden("agent_mock_80.golden.jsonl", &records_to_jsonl(&agent));
    let baseline = run_segments(&segs, Task::Binary, Classifier::Baseline(&mock), &config, 4, "mock-1");
    check_golden("baseline_mock_80.golden.jsonl", &records_to_jsonl(&baseline));
    for (a, b) in agent.iter().zip(&baseline) {
        assert_eq!(a.label, b.label);
    }
}

#[test]
fn record_then_replay_reproduces_run() {
    let segs: Vec<Segment> = binary_80().into_iter().take(6).collect();
    let config = AgentConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("replay.jsonl");
    let mock = MockBackend::new(RuleEngine::starter(), Task::Binary);
    let recorder = RecordingBackend::new(&mock, &path).unwrap();
    let live = run_segments(&segs, Task::Binary, Classifier::Agent(&recorder), &config, 3, "r");
    drop(recorder);

    let replay = ReplayBackend::load(&path).unwrap();
    assert_eq!(replay.len(), 12);
    let again = run_segments(&segs, Task::Binary, Classifier::Agent(&replay), &config, 1, "r");
    assert_eq!(records_to_jsonl(&live), records_to_jsonl(&again));

    // A truncated last line is skipped, not fatal.
    let mut f = std::fs::OpenOptions::new().append(true).open(&path).unwrap();
    f.write_all(b"{\"key\":\"abc\",\"requ").unwrap();
    assert_eq!(ReplayBackend::load(&path).unwrap().len(), 12);

    // Requests never recorded fail per segment.
    let other: Vec<Segment> = binary_80().into_iter().skip(70).take(2).collect();
    let missed = run_segments(&other, Task::Binary, Classifier::Agent(&replay), &config, 1, "r");
    assert!(missed.iter().all(|r| r.is_error()));
    assert!(missed[0].error.as_ref().unwrap().contains("no recorded response"));
}

#[test]
fn two_node_transcript_replays() {
    // Frozen exchange of one two-node run; each stored reply must parse to
    // the node result the graph reports.
    let seg = &binary_80()[40];
    let config = AgentConfig::default();
    let path = fixture("two_node_transcript.jsonl");
    if std::env::var_os("BLESS").is_some() {
        let _ = std::fs::remove_file(&path);
        let mock = MockBackend::new(RuleEngine::starter(), Task::Binary);
        let rec = RecordingBackend::new(&mock, &path).unwrap();
        run_graph(seg, Task::Binary, &rec, &config).unwrap();
    }
    let replay = ReplayBackend::load(&path).unwrap();
    assert_eq!(replay.len(), 2);
    let state = run_graph_state(seg, Task::Binary, &replay, &config).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let responses: Vec<String> = text
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["response"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    let nodes = [
        state.vowel_analysis().unwrap(),
        state.dialect_features_analysis().unwrap(),
    ];
    for (i, (node, response)) in nodes.iter().zip(&responses).enumerate() {
        let parsed = parse_node_reply(response, Task::Binary, i == 1).unwrap();
        assert_eq!(node.raw_response, *response);
        assert_eq!(node.class_confidences, parsed.confidences);
        assert_eq!(node.reasoning, parsed.reasoning);
    }
}

/// Fails the first node of every segment whose IPA contains `marker`.
struct FailingFirstNode<'a> {
    inner: &'a MockBackend,
    marker: &'static str,
}

impl ChatBackend for FailingFirstNode<'_> {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let user = &request.messages.last().unwrap().content;
        let first_node = request.messages[0].content.contains("Focus on vowels and consonants");
        if first_node && user.contains(self.marker) {
            return Err(BackendError::Http {
                status: 400,
                body: "bad request".into(),
            });
        }
        self.inner.complete(request)
    }
}

#[test]
fn failed_node_becomes_error_record() {
    let segs = binary_80();
    let mock = MockBackend::new(RuleEngine::starter(), Task::Binary);
    let backend = FailingFirstNode {
        inner: &mock,
        marker: "ʃ",
    };
    let records = run_segments(
        &segs,
        Task::Binary,
        Classifier::Agent(&backend),
        &AgentConfig::default(),
        8,
        "f",
    );
    assert_eq!(records.len(), segs.len());
    let failing = segs.iter().filter(|s| s.ipa_transcription.contains('ʃ')).count();
    assert!(failing > 0 && failing < segs.len());
    assert_eq!(records.iter().filter(|r| r.is_error()).count(), failing);
    for (seg, rec) in segs.iter().zip(&records) {
        assert_eq!(rec.segment_id, seg.id);
        if rec.is_error() {
            let msg = rec.error.as_deref().unwrap();
            assert!(msg.contains("vowel_consonant") && msg.contains("HTTP 400"), "{msg}");
            assert!(rec.label.is_none());
        }
    }
}

/// Replies with prose first, then with a proper block once asked again.
struct Sloppy {
    inner: MockBackend,
    calls: AtomicUsize,
}

impl ChatBackend for Sloppy {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if request.messages.iter().all(|m| m.role != "assistant") {
            return Ok("I think it sounds alpine.".into());
        }
        self.inner.complete(request)
    }
}

#[test]
fn unparseable_reply_gets_one_reformat_request() {
    let seg = &binary_80()[0];
    let config = AgentConfig::default();
    let sloppy = Sloppy {
        inner: MockBackend::new(RuleEngine::starter(), Task::Binary),
        calls: AtomicUsize::new(0),
    };
    let got = run_graph(seg, Task::Binary, &sloppy, &config).unwrap();
    assert_eq!(sloppy.calls.load(Ordering::SeqCst), 4);
    let want = classify_rules(seg, RuleSet::starter(), Task::Binary).unwrap();
    assert_eq!(got.label, want.label);

    let baseline = run_baseline(seg, Task::Binary, &sloppy, &config).unwrap();
    assert_eq!(baseline.label, want.label);
}

/// Minimal HTTP server answering each connection from `replies` in order.
fn fake_server(replies: Vec<(u16, String)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse().unwrap();
                    }
                }
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            bodies.push(String::from_utf8(buf).unwrap());
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        bodies
    });
    (url, handle)
}

#[test]
fn openai_backend_against_local_server() {
    let ok = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": "Highest Alemannic"}}]});
    let (url, server) = fake_server(vec![
        (200, ok.to_string()),
        (429, "{\"error\":\"slow down\"}".into()),
        (503, "overloaded".into()),
        (200, "{\"choices\": []}".into()),
    ]);
    let cfg = BackendConfig {
        endpoint: url,
        timeout_secs: 5,
        ..BackendConfig::default()
    };
    let backend = OpenAiBackend::new(&cfg, Some("sk-test".into()));
    let req = cfg.request(vec![alemannic::agent::ChatMessage::user("hi")]);
    assert_eq!(backend.complete(&req).unwrap(), "Highest Alemannic");
    assert!(matches!(backend.complete(&req), Err(BackendError::Quota(_))));
    let err = backend.complete(&req).unwrap_err();
    assert!(matches!(err, BackendError::Http { status: 503, .. }) && err.is_transient());
    assert!(matches!(backend.complete(&req), Err(BackendError::Response(_))));
    let bodies = server.join().unwrap();
    let sent: ChatRequest = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(sent, req);
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let cfg = BackendConfig {
        endpoint: format!("http://{addr}/v1"),
        timeout_secs: 2,
        ..BackendConfig::default()
    };
    let backend = OpenAiBackend::new(&cfg, None);
    let err = backend.complete(&cfg.request(vec![])).unwrap_err();
    assert!(err.is_transient(), "{err}");
}
