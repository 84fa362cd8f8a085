use alemannic::alignment::{
    align, ref_phones_for_german, reference_words, render_alignment, Alignment, EditOp, GermanG2p, ReferenceWord,
    DEFAULT_GAP_PENALTY,
};
use alemannic::ipa::{features_of, phone_distance, tokenize, IpaChart, Phone, PhoneSequence};
use proptest::prelude::*;

fn fixture_path(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Compares against a committed golden file; `BLESS=1` rewrites it.
fn assert_golden(name: &str, actual: &str) {
    let path = fixture_path(name);
    if std::env::var_os("BLESS").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

/// Minimum cost over every monotone alignment, by exhaustive recursion.
fn brute_force_cost(r: &[Phone], d: &[Phone], gap: f64) -> f64 {
    match (r.split_first(), d.split_first()) {
        (None, _) => d.len() as f64 * gap,
        (_, None) => r.len() as f64 * gap,
        (Some((r0, rs)), Some((d0, ds))) => {
            let sub = phone_distance(r0, d0) + brute_force_cost(rs, ds, gap);
            let del = gap + brute_force_cost(rs, d, gap);
            let ins = gap + brute_force_cost(r, ds, gap);
            sub.min(del).min(ins)
        }
    }
}

const PHONE_POOL: &[&str] = &[
    "a", "aː", "e", "ɛ", "i", "iː", "y", "o", "ɔ", "u", "ʊ", "ə", "ɐ", "p", "b", "t", "d", "k", "ɡ", "x", "ç", "s",
    "ʃ", "z", "m", "n", "ŋ", "l", "r", "t͡s", "₪",
];

fn phone() -> impl Strategy<Value = Phone> {
    prop::sample::select(PHONE_POOL).prop_map(|s| features_of(s, IpaChart::bundled()))
}

fn phones(max: usize) -> impl Strategy<Value = Vec<Phone>> {
    prop::collection::vec(phone(), 0..=max)
}

/// Reference side split into one to three words.
fn refs_from(ps: Vec<Phone>, cuts: (usize, usize)) -> Vec<ReferenceWord> {
    let n = ps.len();
    let (a, b) = (cuts.0.min(n), cuts.1.min(n));
    let (a, b) = (a.min(b), a.max(b));
    [&ps[..a], &ps[a..b], &ps[b..]]
        .iter()
        .enumerate()
        .filter(|(_, chunk)| !chunk.is_empty())
        .map(|(i, chunk)| ReferenceWord {
            orthography: format!("w{i}"),
            ref_phones: PhoneSequence::from_phones(chunk.to_vec()),
        })
        .collect()
}

fn check_projections(a: &Alignment, dialect: &[Phone], refs: &[ReferenceWord]) {
    let dia: Vec<_> = a.dialect_phones().cloned().collect();
    assert_eq!(dia, dialect);
    let concat: Vec<_> = refs.iter().flat_map(|w| w.ref_phones.phones.clone()).collect();
    let rp: Vec<_> = a.ref_phones().cloned().collect();
    assert_eq!(rp, concat);
    let sum: f64 = a.units.iter().map(|u| u.cost).sum();
    assert_eq!(sum, a.total_cost);
    for u in &a.units {
        assert!(refs.is_empty() || u.ref_word < refs.len());
        match u.op {
            EditOp::Match => assert_eq!(u.ref_phone, u.dialect_phone),
            EditOp::Substitute => assert!(u.ref_phone.is_some() && u.dialect_phone.is_some()),
            EditOp::Delete => assert!(u.dialect_phone.is_none()),
            EditOp::Insert => assert!(u.ref_phone.is_none()),
        }
    }
}

proptest! {
    #[test]
    fn dp_matches_brute_force(r in phones(6), d in phones(6), cuts in (0usize..7, 0usize..7)) {
        let refs = refs_from(r.clone(), cuts);
        let dialect = PhoneSequence::from_phones(d.clone());
        let a = align(&dialect, &refs, DEFAULT_GAP_PENALTY);
        let oracle = brute_force_cost(&r, &d, DEFAULT_GAP_PENALTY);
        prop_assert!((a.total_cost - oracle).abs() < 1e-9, "dp {} oracle {}", a.total_cost, oracle);
        check_projections(&a, &d, &refs);
    }

    #[test]
    fn projections_hold_on_longer_inputs(r in phones(25), d in phones(25), cuts in (0usize..26, 0usize..26)) {
        let refs = refs_from(r, cuts);
        let a = align(&PhoneSequence::from_phones(d.clone()), &refs, 0.45);
        check_projections(&a, &d, &refs);
    }

    #[test]
    fn appending_shared_phone_never_raises_cost(r in phones(8), d in phones(8), x in phone()) {
        let refs = refs_from(r.clone(), (8, 8));
        let before = align(&PhoneSequence::from_phones(d.clone()), &refs, DEFAULT_GAP_PENALTY);
        let mut r2 = r;
        r2.push(x.clone());
        let mut d2 = d;
        d2.push(x);
        let after = align(&PhoneSequence::from_phones(d2), &refs_from(r2, (9, 9)), DEFAULT_GAP_PENALTY);
        prop_assert!(after.total_cost <= before.total_cost + 1e-12);
    }

    #[test]
    fn alignment_is_deterministic(r in phones(10), d in phones(10)) {
        let refs = refs_from(r, (3, 6));
        let dialect = PhoneSequence::from_phones(d);
        prop_assert_eq!(align(&dialect, &refs, 0.6), align(&dialect, &refs, 0.6));
    }
}

#[test]
fn g2p_matches_hand_checked_words() {
    let text = std::fs::read_to_string(fixture_path("g2p_words.tsv")).unwrap();
    let mut checked = 0;
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()) {
        let (word, expected) = line.split_once('\t').unwrap();
        let got = GermanG2p::bundled().transcribe(word);
        assert_eq!(got, expected, "{word}");
        let phones = ref_phones_for_german(word);
        assert!(phones.iter().all(|p| !p.is_unknown()), "{word}");
        checked += 1;
    }
    assert_eq!(checked, 50);
}

#[test]
fn sentence_alignment_golden_render() {
    let dialect = tokenize("miːr hɛnd ivɔnə bɔitlər bʃuəxt", IpaChart::bundled());
    let refs = reference_words("Wir haben Yvonne Beutler besucht.", GermanG2p::bundled());
    let a = align(&dialect, &refs, DEFAULT_GAP_PENALTY);
    assert_golden("alignment_render.txt", &render_alignment(&a));
}
