//! Regenerates the synthetic manifests under `tests/fixtures`.
//!
//! Each sentence is run through the German G2P and then through a handful of
//! per-dialect sound changes, applied with fixed probabilities and a seeded
//! RNG. The output is deterministic.
//!
//! ```text
//! cargo run -p alemannic-core --example make_fixtures -- crates/core/tests/fixtures
//! ```

use std::collections::HashSet;
use std::path::PathBuf;

use alemannic::alignment::GermanG2p;
use alemannic::dataset::{manifest_to_string, Corpus, Segment, SourceClass};
use alemannic::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SWISSDIAL: [&str; 24] = [
    "Die Kinder spielen heute im Garten.",
    "Wir haben gestern einen schönen Tag gehabt.",
    "Das Wasser im See ist sehr kalt.",
    "Meine Mutter kocht am Abend eine Suppe.",
    "Der Zug fährt um acht Uhr nach Bern.",
    "Im Winter liegt viel Schnee auf den Bergen.",
    "Er hat das Buch schon zweimal gelesen.",
    "Die Katze schläft auf dem warmen Ofen.",
    "Am Sonntag gehen wir zusammen wandern.",
    "Das Brot aus der Bäckerei schmeckt gut.",
    "Sie hat ihrem Bruder einen Brief geschrieben.",
    "Die Kühe stehen auf der grünen Wiese.",
    "Ich kaufe morgen frisches Gemüse ein.",
    "Der Hund bellt, wenn jemand kommt.",
    "Die Straße ist nach dem Regen nass.",
    "Wir müssen die Fenster schließen.",
    "Der Lehrer erklärt die Aufgabe noch einmal.",
    "Im Sommer baden die Leute im Fluss.",
    "Die Glocken läuten jeden Abend.",
    "Meine Schwester wohnt in einem kleinen Dorf.",
    "Das Feld hinter dem Haus ist gelb.",
    "Der Bauer fährt mit dem Traktor aufs Land.",
    "Hast du den Schlüssel gefunden?",
    "Die Blumen im Fenster sind schön.",
];

const STT: [&str; 24] = [
    "Wir müssen diese Vorlage heute behandeln.",
    "Die Kommission hat den Antrag abgelehnt.",
    "Der Kanton trägt die Kosten selbst.",
    "Das Geschäft wird in der nächsten Sitzung beraten.",
    "Die Gemeinden brauchen mehr Geld für die Schulen.",
    "Ich bitte Sie, diesem Antrag zuzustimmen.",
    "Die Regierung kennt das Problem schon lange.",
    "Wir haben eine klare Haltung in dieser Frage.",
    "Die Landwirtschaft ist für unsere Täler wichtig.",
    "Der Verkehr auf den Straßen nimmt stetig zu.",
    "Das Gesetz muss noch einmal geprüft werden.",
    "Die Kinder sollen gute Schulen besuchen können.",
    "Es geht hier um die Zukunft der Jugend.",
    "Der Rat hat diese Frage lange diskutiert.",
    "Die Kosten für die Spitäler steigen jedes Jahr.",
    "Wir danken der Kommission für die gute Arbeit.",
    "Die Bevölkerung hat klar entschieden.",
    "Der Wald ist für die Gemeinden ein wichtiges Gut.",
    "Die Bahn soll auch abends fahren.",
    "Das Hotel im Dorf bleibt den Winter über offen.",
    "Viele Familien suchen eine günstige Wohnung.",
    "Die Steuern dürfen nicht weiter steigen.",
    "Der Bund zahlt einen kleinen Beitrag.",
    "Wir stimmen dem Kredit für die Brücke zu.",
];

/// Probabilities of each sound change.
#[derive(Clone, Copy)]
struct Profile {
    unround: f64,
    full_ending: f64,
    st_palatal: f64,
    ei: f64,
    k_fricative: f64,
    l_vocal: f64,
    nd_velar: f64,
    open_a: f64,
    open_e: f64,
}

const BASE: Profile = Profile {
    unround: 0.05,
    full_ending: 0.05,
    st_palatal: 0.05,
    ei: 0.1,
    k_fricative: 0.9,
    l_vocal: 0.02,
    nd_velar: 0.02,
    open_a: 0.05,
    open_e: 0.03,
};

fn profile(label: Label, innerschweiz_highest: bool) -> Profile {
    if innerschweiz_highest {
        return Profile {
            unround: 0.5,
            full_ending: 0.45,
            st_palatal: 0.4,
            ei: 0.4,
            ..BASE
        };
    }
    match label {
        Label::Vs => Profile {
            unround: 0.85,
            full_ending: 0.8,
            st_palatal: 0.7,
            ei: 0.6,
            ..BASE
        },
        Label::Zh => Profile { open_a: 0.7, ..BASE },
        Label::Be => Profile {
            l_vocal: 0.8,
            nd_velar: 0.7,
            ..BASE
        },
        Label::Bs => Profile {
            k_fricative: 0.1,
            ..BASE
        },
        Label::Gr => Profile {
            k_fricative: 0.2,
            ..BASE
        },
        Label::Lu => Profile { open_e: 0.6, ..BASE },
        Label::Sg => Profile {
            open_a: 0.3,
            open_e: 0.5,
            ..BASE
        },
        _ => BASE,
    }
}

fn unrounded(v: &str) -> Option<&'static str> {
    Some(match v {
        "y" => "i",
        "yː" => "iː",
        "ʏ" => "ɪ",
        "ø" => "e",
        "øː" => "eː",
        "œ" => "ɛ",
        _ => return None,
    })
}

const NOISE: [(&str, &str); 6] = [("t", "d"), ("p", "b"), ("ɪ", "i"), ("ʊ", "u"), ("ɛ", "e"), ("r", "ʁ")];

fn dialect_word(word: &str, phones: &[String], p: Profile, rng: &mut ChaCha8Rng) -> String {
    let lower = word.to_lowercase();
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < phones.len() {
        let ph = phones[i].as_str();
        let next = phones.get(i + 1).map(String::as_str);
        let last = i + 1 == phones.len();
        let prev = if i > 0 { Some(phones[i - 1].as_str()) } else { None };
        let mut emit = ph.to_string();
        if let Some(u) = unrounded(ph) {
            if rng.gen_bool(p.unround) {
                emit = u.into();
            }
        } else if ph == "ə" || ph == "ɐ" {
            let ending = last || (next == Some("n") && i + 2 == phones.len());
            if ending && rng.gen_bool(p.full_ending) {
                emit = if rng.gen_bool(0.5) { "u" } else { "o" }.into();
            }
            if next == Some("n") && i + 2 == phones.len() && rng.gen_bool(0.6) {
                out.push(emit);
                break;
            }
        } else if ph == "s" && next == Some("t") && i > 0 {
            if rng.gen_bool(p.st_palatal) {
                emit = "ʃ".into();
            }
        } else if ph == "ɪ" && prev == Some("a") && lower.contains("ei") {
            if rng.gen_bool(p.ei) {
                out.pop();
                out.push("e".into());
                emit = "i".into();
            }
        } else if ph == "k" {
            if rng.gen_bool(p.k_fricative) {
                emit = if rng.gen_bool(0.5) { "x" } else { "k͡x" }.into();
            }
        } else if ph == "l" && i > 0 && next.is_none_or(|n| !is_vowel(n)) {
            if rng.gen_bool(p.l_vocal) {
                emit = "u".into();
            }
        } else if ph == "n" && lower.contains("nd") && matches!(next, Some("d" | "t")) {
            if rng.gen_bool(p.nd_velar) {
                out.push("ŋ".into());
                i += 2;
                continue;
            }
        } else if ph == "aː" {
            if rng.gen_bool(p.open_a) {
                emit = "ɔː".into();
            }
        } else if (ph == "eː" || ph == "ɛ") && rng.gen_bool(p.open_e) {
            emit = "æ".into();
        }
        if emit == ph && rng.gen_bool(0.04) {
            if let Some((_, b)) = NOISE.iter().find(|(a, _)| *a == ph) {
                emit = (*b).into();
            }
        }
        out.push(emit);
        i += 1;
    }
    out.concat()
}

fn is_vowel(p: &str) -> bool {
    p.chars().next().is_some_and(|c| "aeiouyæøœɛɪʊʏɔəɐɒ".contains(c))
}

fn transcribe(sentence: &str, p: Profile, rng: &mut ChaCha8Rng) -> String {
    let g2p = GermanG2p::bundled();
    sentence
        .split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphabetic()))
        .filter(|w| !w.is_empty())
        .map(|w| {
            let phones: Vec<String> = g2p.phones(w).symbols().into_iter().map(String::from).collect();
            dialect_word(w, &phones, p, rng)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

struct Ids {
    rng: ChaCha8Rng,
    seen: HashSet<String>,
}

impl Ids {
    fn next(&mut self) -> String {
        loop {
            let id = format!("seg-{:08x}", self.rng.gen::<u32>());
            if self.seen.insert(id.clone()) {
                return id;
            }
        }
    }
}

fn swissdial(ids: &mut Ids, rng: &mut ChaCha8Rng, sentence: usize, label: Label) -> Segment {
    Segment {
        id: ids.next(),
        corpus: Corpus::SwissDial,
        sentence_id: Some(format!("sd-{:03}", sentence + 1)),
        audio_path: Some(format!("audio/{}/sd-{:03}.wav", label.code(), sentence + 1)),
        ipa_transcription: transcribe(SWISSDIAL[sentence], profile(label, false), rng),
        standard_german: SWISSDIAL[sentence].into(),
        canton: None,
        stt_region: None,
        label8: Some(label),
        source_class: None,
        label2: None,
    }
}

/// `speech` picks the dialect used to render the transcription.
fn stt(ids: &mut Ids, rng: &mut ChaCha8Rng, sentence: usize, region: &str, canton: &str, speech: Profile) -> Segment {
    Segment {
        id: ids.next(),
        corpus: Corpus::Stt,
        sentence_id: None,
        audio_path: None,
        ipa_transcription: transcribe(STT[sentence], speech, rng),
        standard_german: STT[sentence].into(),
        canton: Some(canton.into()),
        stt_region: Some(region.into()),
        label8: None,
        source_class: None,
        label2: None,
    }
}

fn manifest_240() -> Vec<Segment> {
    let mut ids = Ids {
        rng: ChaCha8Rng::seed_from_u64(240),
        seen: HashSet::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2400);
    let mut out = Vec::new();
    for s in 0..SWISSDIAL.len() {
        for &label in alemannic::Task::Eight.labels() {
            out.push(swissdial(&mut ids, &mut rng, s, label));
        }
    }
    let groups: [(&str, &str, usize, Profile); 9] = [
        ("Innerschweiz", "Uri", 6, profile(Label::Vs, true)),
        ("Innerschweiz", "Obwalden", 5, profile(Label::Vs, true)),
        ("Innerschweiz", "Nidwalden", 5, profile(Label::Vs, true)),
        ("Innerschweiz", "Luzern", 8, profile(Label::Lu, false)),
        ("Zürich", "Aargau", 8, profile(Label::Ag, false)),
        ("Ostschweiz", "St. Gallen", 8, profile(Label::Sg, false)),
        ("Ostschweiz", "Thurgau", 4, BASE),
        ("Innerschweiz", "Schwyz", 4, BASE),
        ("", "", 0, BASE),
    ];
    let mut n = 0;
    for (region, canton, count, speech) in groups {
        for _ in 0..count {
            out.push(stt(&mut ids, &mut rng, n % STT.len(), region, canton, speech));
            n += 1;
        }
    }
    out
}

fn binary_test_80() -> Vec<Segment> {
    let mut ids = Ids {
        rng: ChaCha8Rng::seed_from_u64(80),
        seen: HashSet::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let mut out = Vec::new();
    let sources = [(Label::Ag, 14), (Label::Lu, 13), (Label::Zh, 13), (Label::Vs, 20)];
    let mut s = 0;
    for (label, count) in sources {
        for _ in 0..count {
            let mut seg = swissdial(&mut ids, &mut rng, s % SWISSDIAL.len(), label);
            let source = SourceClass::from_label8(label).expect("binary source");
            seg.source_class = Some(source);
            seg.label2 = Some(if label == Label::Vs {
                Label::Highest
            } else {
                Label::High
            });
            out.push(seg);
            s += 1;
        }
    }
    let cantons = ["Uri", "Obwalden", "Nidwalden"];
    for k in 0..20 {
        let mut seg = stt(
            &mut ids,
            &mut rng,
            k,
            "Innerschweiz",
            cantons[k % 3],
            profile(Label::Vs, true),
        );
        seg.source_class = Some(SourceClass::InnerschweizHighest);
        seg.label2 = Some(Label::Highest);
        out.push(seg);
    }
    out
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "tests/fixtures".into()));
    let m240 = manifest_240();
    let m20: Vec<Segment> = m240.iter().step_by(12).cloned().collect();
    let m80 = binary_test_80();
    for (name, segs) in [
        ("manifest_240.jsonl", &m240),
        ("manifest_20.jsonl", &m20),
        ("binary_test_80.jsonl", &m80),
    ] {
        let path = dir.join(name);
        std::fs::write(&path, manifest_to_string(segs)).expect("write fixture");
        println!("{} ({} segments)", path.display(), segs.len());
    }
}
