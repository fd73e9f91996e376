//! The three-way sentiment label shared by every stage of the pipeline.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sentiment orientation of a synset.
///
/// The variant order fixes the deterministic tie-break order used elsewhere:
/// negative < neutral < positive.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Neutral,
    Positive,
}

impl Label {
    /// All labels in tie-break order.
    pub const ALL: [Label; 3] = [Label::Negative, Label::Neutral, Label::Positive];

    /// Signed form: -1, 0, +1.
    pub fn signed(self) -> i64 {
        match self {
            Label::Negative => -1,
            Label::Neutral => 0,
            Label::Positive => 1,
        }
    }

    /// Label carried by the sign of an arbitrary integer sum.
    pub fn from_sign(value: i64) -> Label {
        match value.signum() {
            1 => Label::Positive,
            -1 => Label::Negative,
            _ => Label::Neutral,
        }
    }

    /// Sign-negated label; neutral stays neutral.
    pub fn negated(self) -> Label {
        Label::from_sign(-self.signed())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Negative => "negative",
            Label::Neutral => "neutral",
            Label::Positive => "positive",
        }
    }

    /// Dense index in `Label::ALL`, used by confusion matrices.
    pub fn index(self) -> usize {
        match self {
            Label::Negative => 0,
            Label::Neutral => 1,
            Label::Positive => 2,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown label `{0}` (expected positive, neutral, or negative)")]
pub struct ParseLabelError(pub String);

impl FromStr for Label {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Label::Positive),
            "neutral" => Ok(Label::Neutral),
            "negative" => Ok(Label::Negative),
            other => Err(ParseLabelError(other.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_round_trip() {
        for label in Label::ALL {
            assert_eq!(Label::from_sign(label.signed()), label);
        }
    }

    #[test]
    fn negation_flips_sign_and_keeps_neutral() {
        assert_eq!(Label::Positive.negated(), Label::Negative);
        assert_eq!(Label::Negative.negated(), Label::Positive);
        assert_eq!(Label::Neutral.negated(), Label::Neutral);
    }

    #[test]
    fn parse_rejects_shorthand() {
        assert!("pos".parse::<Label>().is_err());
        assert_eq!("positive".parse::<Label>().unwrap(), Label::Positive);
    }

    #[test]
    fn tie_break_order() {
        assert!(Label::Negative < Label::Neutral);
        assert!(Label::Neutral < Label::Positive);
    }
}
