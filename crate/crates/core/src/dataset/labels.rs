use super::{Corpus, DatasetConfig, DatasetError, Segment, SourceClass};
use crate::Label;

// Alias groups; the first entry is the canonical spelling.
const CANTONS: &[&[&str]] = &[
    &["Aargau", "argovia", "argovie", "ag"],
    &["Basel-Stadt", "basel", "bâle", "basel stadt", "bs"],
    &["Basel-Landschaft", "basel land", "baselland", "bl"],
    &["Bern", "berne", "be"],
    &["Graubünden", "grisons", "graubunden", "gr"],
    &["Luzern", "lucerne", "lu"],
    &["Nidwalden", "nw"],
    &["Obwalden", "ow"],
    &["Schwyz", "sz"],
    &[
        "St. Gallen",
        "st.gallen",
        "sankt gallen",
        "saint-gall",
        "st gallen",
        "sg",
    ],
    &["Thurgau", "tg"],
    &["Uri", "ur"],
    &["Wallis", "valais", "vs"],
    &["Zug", "zg"],
    &["Zürich", "zurich", "zh"],
];

const REGIONS: &[&[&str]] = &[
    &["Basel", "bs"],
    &["Bern", "berne", "be"],
    &["Graubünden", "grisons", "graubunden", "gr"],
    &["Innerschweiz", "central switzerland", "zentralschweiz"],
    &["Ostschweiz", "eastern switzerland"],
    &["Wallis", "valais", "vs"],
    &["Zürich", "zurich", "zh"],
];

fn canonical(table: &'static [&'static [&'static str]], name: &str) -> Option<&'static str> {
    let key = name.trim().to_lowercase();
    table
        .iter()
        .find(|group| group.iter().any(|alias| alias.to_lowercase() == key))
        .map(|group| group[0])
}

/// Canonical German spelling of a canton name, if it is a known alias.
pub fn canonical_canton(name: &str) -> Option<&'static str> {
    canonical(CANTONS, name)
}

fn same_canton(a: &str, b: &str) -> bool {
    match (canonical_canton(a), canonical_canton(b)) {
        (Some(x), Some(y)) => x == y,
        _ => a.trim().eq_ignore_ascii_case(b.trim()),
    }
}

/// Maps an STT dialect region (plus canton) onto the eight SwissDial labels.
///
/// Aargau is approximated by the Zürich and Bern regions inside canton
/// Aargau, Lucerne by Innerschweiz inside canton Lucerne and St. Gallen by
/// Ostschweiz inside canton St. Gallen. Regions that correspond to a label
/// directly map to it; everything else maps to `None`.
pub fn map_stt_label(stt_region: &str, canton: Option<&str>) -> Option<Label> {
    let region = canonical(REGIONS, stt_region)?;
    let canton = canton.and_then(canonical_canton);
    match (region, canton) {
        ("Zürich" | "Bern", Some("Aargau")) => Some(Label::Ag),
        ("Innerschweiz", Some("Luzern")) => Some(Label::Lu),
        ("Ostschweiz", Some("St. Gallen")) => Some(Label::Sg),
        ("Zürich", _) => Some(Label::Zh),
        ("Bern", _) => Some(Label::Be),
        ("Basel", _) => Some(Label::Bs),
        ("Graubünden", _) => Some(Label::Gr),
        ("Wallis", _) => Some(Label::Vs),
        _ => None,
    }
}

/// Source class of a segment: the stored value, else derived from `label8`,
/// else Innerschweiz_Highest for STT Innerschweiz segments from a configured
/// canton.
pub fn source_class_of(seg: &Segment, config: &DatasetConfig) -> Option<SourceClass> {
    if let Some(s) = seg.source_class {
        return Some(s);
    }
    if let Some(s) = seg.label8.and_then(SourceClass::from_label8) {
        return Some(s);
    }
    let innerschweiz = seg.corpus == Corpus::Stt
        && seg.stt_region.as_deref().and_then(|r| canonical(REGIONS, r)) == Some("Innerschweiz");
    let canton = seg.canton.as_deref()?;
    if innerschweiz
        && config
            .innerschweiz_highest_cantons
            .iter()
            .any(|c| same_canton(c, canton))
    {
        return Some(SourceClass::InnerschweizHighest);
    }
    None
}

/// Binary label of a segment: `Some(High)` for ZH, AG, LU; `Some(Highest)`
/// for VS and Innerschweiz_Highest; `None` (excluded) for BE, GR, BS, SG.
pub fn to_binary(seg: &Segment, config: &DatasetConfig) -> Result<Option<Label>, DatasetError> {
    if let Some(source) = source_class_of(seg, config) {
        return Ok(Some(binary_of_source(source)));
    }
    match seg.label8 {
        Some(Label::Be | Label::Gr | Label::Bs | Label::Sg) => Ok(None),
        Some(other) => unreachable!("label {other} has a source class"),
        None => Err(DatasetError::Unlabeled(seg.id.clone())),
    }
}

pub fn binary_of_source(source: SourceClass) -> Label {
    match source {
        SourceClass::Aargau | SourceClass::Lucerne | SourceClass::Zurich => Label::High,
        SourceClass::Valais | SourceClass::InnerschweizHighest => Label::Highest,
    }
}

/// Fills `label8` (STT mapping), `source_class` and `label2` where they can be
/// derived. Stored values are kept.
pub fn annotate(seg: &mut Segment, config: &DatasetConfig) {
    if seg.label8.is_none() && seg.corpus == Corpus::Stt {
        if let Some(region) = seg.stt_region.as_deref() {
            seg.label8 = map_stt_label(region, seg.canton.as_deref());
        }
    }
    if seg.source_class.is_none() {
        seg.source_class = source_class_of(seg, config);
    }
    if seg.label2.is_none() {
        seg.label2 = to_binary(seg, config).ok().flatten();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stt(region: &str, canton: &str) -> Segment {
        Segment {
            id: "x".into(),
            corpus: Corpus::Stt,
            sentence_id: None,
            audio_path: None,
            ipa_transcription: "a".into(),
            standard_german: "a".into(),
            canton: Some(canton.into()),
            stt_region: Some(region.into()),
            label8: None,
            source_class: None,
            label2: None,
        }
    }

    #[test]
    fn stt_mapping_examples() {
        assert_eq!(map_stt_label("Innerschweiz", Some("Luzern")), Some(Label::Lu));
        assert_eq!(map_stt_label("Ostschweiz", Some("St. Gallen")), Some(Label::Sg));
        assert_eq!(map_stt_label("Zürich", Some("Aargau")), Some(Label::Ag));
        assert_eq!(map_stt_label("Bern", Some("Aargau")), Some(Label::Ag));
        assert_eq!(map_stt_label("Ostschweiz", Some("Thurgau")), None);
        assert_eq!(map_stt_label("Innerschweiz", Some("Uri")), None);
        assert_eq!(map_stt_label("Basel", Some("Aargau")), Some(Label::Bs));
        assert_eq!(map_stt_label("Wallis", None), Some(Label::Vs));
        assert_eq!(map_stt_label("Mars", None), None);
    }

    #[test]
    fn aliases_are_accepted() {
        assert_eq!(map_stt_label("zurich", Some("argovia")), Some(Label::Ag));
        assert_eq!(map_stt_label("Central Switzerland", Some("Lucerne")), Some(Label::Lu));
    }

    #[test]
    fn innerschweiz_highest_follows_config() {
        let cfg = DatasetConfig::default();
        let mut seg = stt("Innerschweiz", "Uri");
        annotate(&mut seg, &cfg);
        assert_eq!(seg.label8, None);
        assert_eq!(seg.source_class, Some(SourceClass::InnerschweizHighest));
        assert_eq!(seg.label2, Some(Label::Highest));

        let mut seg = stt("Innerschweiz", "Schwyz");
        annotate(&mut seg, &cfg);
        assert_eq!(seg.source_class, None);
        assert!(to_binary(&seg, &cfg).is_err());

        let cfg = DatasetConfig {
            innerschweiz_highest_cantons: vec!["Schwyz".into()],
            ..Default::default()
        };
        assert_eq!(to_binary(&seg, &cfg).unwrap(), Some(Label::Highest));
    }
}
