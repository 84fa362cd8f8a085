use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::IpaError;

const BUNDLED_CHART: &str = include_str!("../../data/ipa_chart.tsv");

macro_rules! ordinal_feature {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "kebab-case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Position on the chart axis, used for step distances.
            pub fn rank(self) -> usize {
                self as usize
            }

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        "unknown {} `{}`",
                        stringify!($name).to_ascii_lowercase(),
                        other
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

ordinal_feature!(
    /// Vowel height, close to open.
    Height {
        Close => "close",
        NearClose => "near-close",
        CloseMid => "close-mid",
        Mid => "mid",
        OpenMid => "open-mid",
        NearOpen => "near-open",
        Open => "open",
    }
);

ordinal_feature!(Backness {
    Front => "front",
    Central => "central",
    Back => "back",
});

ordinal_feature!(
    /// Place of articulation, lips to glottis.
    Place {
        Bilabial => "bilabial",
        Labiodental => "labiodental",
        Dental => "dental",
        Alveolar => "alveolar",
        Postalveolar => "postalveolar",
        Retroflex => "retroflex",
        Palatal => "palatal",
        Velar => "velar",
        Uvular => "uvular",
        Pharyngeal => "pharyngeal",
        Glottal => "glottal",
    }
);

ordinal_feature!(
    /// Manner of articulation, ordered from full closure to open approximation.
    Manner {
        Plosive => "plosive",
        Affricate => "affricate",
        Fricative => "fricative",
        LateralFricative => "lateral-fricative",
        Nasal => "nasal",
        Trill => "trill",
        Tap => "tap",
        Approximant => "approximant",
        LateralApproximant => "lateral-approximant",
    }
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VowelFeatures {
    pub height: Height,
    pub backness: Backness,
    pub rounded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConsonantFeatures {
    pub place: Place,
    pub manner: Manner,
    pub voiced: bool,
}

/// The feature bundle of a chart symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "category", rename_all = "lowercase")]
pub enum FeatureBundle {
    Vowel(VowelFeatures),
    Consonant(ConsonantFeatures),
}

/// Symbol to feature lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct IpaChart {
    entries: HashMap<String, FeatureBundle>,
    // Insertion order, for deterministic iteration.
    symbols: Vec<String>,
}

impl IpaChart {
    /// The chart shipped with the crate.
    pub fn bundled() -> &'static IpaChart {
        static CHART: OnceLock<IpaChart> = OnceLock::new();
        CHART.get_or_init(|| IpaChart::parse(BUNDLED_CHART).expect("bundled IPA chart is valid"))
    }

    /// Parses the tab-separated chart format. Blank lines and `#` comments are
    /// skipped; duplicate symbols are rejected.
    pub fn parse(text: &str) -> Result<Self, IpaError> {
        let mut entries = HashMap::new();
        let mut symbols = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let err = |message: String| IpaError::Chart { line: line_no, message };
            if fields.len() != 5 {
                return Err(err(format!("expected 5 fields, found {}", fields.len())));
            }
            let symbol = fields[0];
            if symbol.is_empty() {
                return Err(err("empty symbol".into()));
            }
            let bundle = match fields[1] {
                "vowel" => FeatureBundle::Vowel(VowelFeatures {
                    height: fields[2].parse().map_err(err)?,
                    backness: fields[3].parse().map_err(err)?,
                    rounded: match fields[4] {
                        "rounded" => true,
                        "unrounded" => false,
                        other => return Err(err(format!("bad rounding `{other}`"))),
                    },
                }),
                "consonant" => FeatureBundle::Consonant(ConsonantFeatures {
                    place: fields[2].parse().map_err(err)?,
                    manner: fields[3].parse().map_err(err)?,
                    voiced: match fields[4] {
                        "voiced" => true,
                        "voiceless" => false,
                        other => return Err(err(format!("bad voicing `{other}`"))),
                    },
                }),
                other => return Err(err(format!("unknown category `{other}`"))),
            };
            if entries.insert(symbol.to_string(), bundle).is_some() {
                return Err(err(format!("duplicate symbol `{symbol}`")));
            }
            symbols.push(symbol.to_string());
        }
        Ok(IpaChart { entries, symbols })
    }

    pub fn get(&self, symbol: &str) -> Option<&FeatureBundle> {
        self.entries.get(symbol)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.entries.contains_key(symbol)
    }

    /// Symbols in file order.
    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Base vowel letters of the IPA vowel chart.
    const IPA_VOWELS: &str = "iyɨʉɯuɪʏʊeøɘɵɤoəɛœɜɞʌɔæɐaɶɑɒ";
    // Pulmonic consonant letters of the IPA consonant chart.
    const IPA_PULMONIC: &str = "pbtdʈɖcɟkɡqɢʔmɱnɳɲŋɴʙrʀⱱɾɽɸβfvθðszʃʒʂʐçʝxɣχʁħʕhɦɬɮʋɹɻjɰlɭʎʟ";

    #[test]
    fn bundled_chart_covers_standard_chart() {
        let chart = IpaChart::bundled();
        for c in IPA_VOWELS.chars() {
            match chart.get(&c.to_string()) {
                Some(FeatureBundle::Vowel(_)) => {}
                other => panic!("vowel {c} maps to {other:?}"),
            }
        }
        for c in IPA_PULMONIC.chars() {
            match chart.get(&c.to_string()) {
                Some(FeatureBundle::Consonant(_)) => {}
                other => panic!("consonant {c} maps to {other:?}"),
            }
        }
        assert_eq!(IPA_VOWELS.chars().count(), 28);
    }

    #[test]
    fn duplicate_symbol_is_rejected() {
        let text = "a\tvowel\topen\tfront\tunrounded\na\tvowel\topen\tback\tunrounded\n";
        let err = IpaChart::parse(text).unwrap_err();
        assert!(err.to_string().contains("duplicate symbol `a`"), "{err}");
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = IpaChart::parse("# header\n\ni\tvowel\tclose\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = IpaChart::parse("t\tconsonant\talveolar\tstop\tvoiceless").unwrap_err();
        assert!(err.to_string().contains("unknown manner `stop`"), "{err}");
    }
}
