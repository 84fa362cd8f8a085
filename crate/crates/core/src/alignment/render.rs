use std::fmt::Write;

use unicode_width::UnicodeWidthStr;

use super::Alignment;

fn pad(s: &str, width: usize) -> String {
    let w = UnicodeWidthStr::width(s);
    let mut out = s.to_string();
    out.extend(std::iter::repeat_n(' ', width.saturating_sub(w)));
    out
}

/// Renders an alignment as a fixed-width table, one block per reference word.
///
/// ```text
/// [0] Tag
///   =  t   t   0.00
///   ~  aː  ɔː  0.15
///   -  k       0.60
/// total 0.75
/// ```
///
/// An empty alignment renders as the empty string.
pub fn render_alignment(a: &Alignment) -> String {
    if a.units.is_empty() {
        return String::new();
    }
    let sym = |p: &Option<crate::ipa::Phone>| p.as_ref().map(|p| p.symbol.clone()).unwrap_or_default();
    let ref_w = a
        .units
        .iter()
        .map(|u| UnicodeWidthStr::width(sym(&u.ref_phone).as_str()))
        .max()
        .unwrap_or(0)
        .max(1);
    let dia_w = a
        .units
        .iter()
        .map(|u| UnicodeWidthStr::width(sym(&u.dialect_phone).as_str()))
        .max()
        .unwrap_or(0)
        .max(1);

    let mut out = String::new();
    let mut block: Option<usize> = None;
    for unit in &a.units {
        if block != Some(unit.ref_word) {
            let orth = a.words.get(unit.ref_word).map(String::as_str).unwrap_or("-");
            writeln!(out, "[{}] {}", unit.ref_word, orth).unwrap();
            block = Some(unit.ref_word);
        }
        writeln!(
            out,
            "  {}  {}  {}  {:.2}",
            unit.op.symbol(),
            pad(&sym(&unit.ref_phone), ref_w),
            pad(&sym(&unit.dialect_phone), dia_w),
            unit.cost
        )
        .unwrap();
    }
    writeln!(out, "total {:.2}", a.total_cost).unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{AlignmentUnit, EditOp};
    use crate::ipa::{features_of, IpaChart};

    #[test]
    fn empty_alignment_renders_empty() {
        assert_eq!(render_alignment(&Alignment::default()), "");
    }

    #[test]
    fn single_match_row() {
        let t = features_of("t", IpaChart::bundled());
        let a = Alignment {
            words: vec!["Tag".into()],
            units: vec![AlignmentUnit {
                ref_word: 0,
                op: EditOp::Match,
                ref_phone: Some(t.clone()),
                dialect_phone: Some(t),
                cost: 0.0,
            }],
            total_cost: 0.0,
        };
        let text = render_alignment(&a);
        let rows: Vec<_> = text.lines().filter(|l| l.starts_with("  ")).collect();
        assert_eq!(rows, ["  =  t  t  0.00"]);
        assert_eq!(text, "[0] Tag\n  =  t  t  0.00\ntotal 0.00\n");
    }
}
