use std::hint::black_box;

use alemannic::agent::{run_graph, AgentConfig, MockBackend};
use alemannic::alignment::{align, reference_words, GermanG2p, DEFAULT_GAP_PENALTY};
use alemannic::eval::{metrics, ConfusionMatrix};
use alemannic::features::{classify_rules, RuleEngine, RuleSet};
use alemannic::ipa::{tokenize, IpaChart};
use alemannic::Task;
use alemannic_bench::binary_fixture;
use criterion::{criterion_group, criterion_main, Criterion};

fn tokenizer(c: &mut Criterion) {
    let segments = binary_fixture();
    c.bench_function("tokenize 80 segments", |b| {
        b.iter(|| {
            for seg in &segments {
                black_box(tokenize(black_box(&seg.ipa_transcription), IpaChart::bundled()));
            }
        })
    });
}

fn alignment(c: &mut Criterion) {
    let segments = binary_fixture();
    let inputs: Vec<_> = segments
        .iter()
        .map(|s| {
            (
                tokenize(&s.ipa_transcription, IpaChart::bundled()),
                reference_words(&s.standard_german, GermanG2p::bundled()),
            )
        })
        .collect();
    c.bench_function("align 80 segments", |b| {
        b.iter(|| {
            for (dialect, refs) in &inputs {
                black_box(align(dialect, refs, DEFAULT_GAP_PENALTY));
            }
        })
    });
}

fn classification(c: &mut Criterion) {
    let segments = binary_fixture();
    let rules = RuleSet::starter();
    c.bench_function("classify_rules 80 segments", |b| {
        b.iter(|| {
            for seg in &segments {
                black_box(classify_rules(seg, rules, Task::Binary).unwrap());
            }
        })
    });
    let backend = MockBackend::new(RuleEngine::starter(), Task::Binary);
    let config = AgentConfig::default();
    c.bench_function("mock agent graph 80 segments", |b| {
        b.iter(|| {
            for seg in &segments {
                black_box(run_graph(seg, Task::Binary, &backend, &config).unwrap());
            }
        })
    });
}

fn scoring(c: &mut Criterion) {
    let rows: Vec<Vec<u64>> = (0..8)
        .map(|i| (0..8).map(|j| if i == j { 30 } else { i + j }).collect())
        .collect();
    let refs: Vec<&[u64]> = rows.iter().map(Vec::as_slice).collect();
    let matrix = ConfusionMatrix::from_rows(Task::Eight, &refs).unwrap();
    c.bench_function("metrics eight-class", |b| {
        b.iter(|| black_box(metrics(black_box(&matrix)).unwrap()))
    });
}

criterion_group!(benches, tokenizer, alignment, classification, scoring);
criterion_main!(benches);
