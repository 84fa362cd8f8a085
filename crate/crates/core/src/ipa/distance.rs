use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::tokenize::{Phone, PhoneKind};
use super::IpaError;

const BUNDLED_WEIGHTS: &str = include_str!("../../data/distance.toml");

/// Feature mismatch weights behind [`phone_distance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceWeights {
    pub height_step: f64,
    pub backness_step: f64,
    pub rounding: f64,
    pub place_step: f64,
    pub manner_step: f64,
    pub voicing: f64,
    pub length: f64,
    pub distinct_floor: f64,
    pub unknown_penalty: f64,
    pub cross_category: f64,
}

impl DistanceWeights {
    pub fn bundled() -> &'static DistanceWeights {
        static WEIGHTS: OnceLock<DistanceWeights> = OnceLock::new();
        WEIGHTS.get_or_init(|| DistanceWeights::parse(BUNDLED_WEIGHTS).expect("bundled distance weights are valid"))
    }

    pub fn parse(text: &str) -> Result<Self, IpaError> {
        let weights: DistanceWeights = toml::from_str(text).map_err(|e| IpaError::Weights(e.to_string()))?;
        weights.validate()?;
        Ok(weights)
    }

    fn validate(&self) -> Result<(), IpaError> {
        let all = [
            ("height_step", self.height_step),
            ("backness_step", self.backness_step),
            ("rounding", self.rounding),
            ("place_step", self.place_step),
            ("manner_step", self.manner_step),
            ("voicing", self.voicing),
            ("length", self.length),
            ("distinct_floor", self.distinct_floor),
            ("unknown_penalty", self.unknown_penalty),
            ("cross_category", self.cross_category),
        ];
        for (name, value) in all {
            if !value.is_finite() || value < 0.0 {
                return Err(IpaError::Weights(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        if self.distinct_floor <= 0.0 || self.distinct_floor > 1.0 {
            return Err(IpaError::Weights("distinct_floor must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Substitution cost between two phones.
    ///
    /// 0 exactly when the symbols are identical. Unknown symbols cost the
    /// fixed penalty, vowel/consonant pairs the cross-category cost, and
    /// same-category pairs the clamped feature mismatch (never below
    /// `distinct_floor` for distinct symbols).
    pub fn distance(&self, a: &Phone, b: &Phone) -> f64 {
        if a.symbol == b.symbol {
            return 0.0;
        }
        let length = if a.long != b.long { self.length } else { 0.0 };
        let raw = match (&a.kind, &b.kind) {
            (PhoneKind::Unknown, _) | (_, PhoneKind::Unknown) => return self.unknown_penalty,
            (PhoneKind::Vowel(x), PhoneKind::Vowel(y)) => {
                self.height_step * x.height.rank().abs_diff(y.height.rank()) as f64
                    + self.backness_step * x.backness.rank().abs_diff(y.backness.rank()) as f64
                    + if x.rounded != y.rounded { self.rounding } else { 0.0 }
                    + length
            }
            (PhoneKind::Consonant(x), PhoneKind::Consonant(y)) => {
                self.place_step * x.place.rank().abs_diff(y.place.rank()) as f64
                    + self.manner_step * x.manner.rank().abs_diff(y.manner.rank()) as f64
                    + if x.voiced != y.voiced { self.voicing } else { 0.0 }
                    + length
            }
            _ => return self.cross_category,
        };
        raw.clamp(self.distinct_floor, 1.0)
    }
}

/// [`DistanceWeights::distance`] under the bundled weights.
pub fn phone_distance(a: &Phone, b: &Phone) -> f64 {
    DistanceWeights::bundled().distance(a, b)
}
