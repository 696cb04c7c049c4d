//! Binary veracity label shared across retrieval, refinement, and metrics.

/// Veracity verdict for a post or article claim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Label {
    Fake,
    Real,
}

impl Label {
    /// Signed encoding used in node feature vectors: Fake -1, Real +1.
    pub fn signed(self) -> f64 {
        match self {
            Label::Fake => -1.0,
            Label::Real => 1.0,
        }
    }

    /// Class index used by the network head: Fake 0, Real 1.
    pub fn class_index(self) -> usize {
        match self {
            Label::Fake => 0,
            Label::Real => 1,
        }
    }

    pub fn from_class_index(index: usize) -> Option<Label> {
        match index {
            0 => Some(Label::Fake),
            1 => Some(Label::Real),
            _ => None,
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Fake => Label::Real,
            Label::Real => Label::Fake,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Fake => "fake",
            Label::Real => "real",
        }
    }
}

impl core::fmt::Display for Label {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Label {
    type Err = ParseLabelError;

    /// Accepts the canonical lowercase names plus common dataset spellings
    /// ("FAKE", "Real", "0"/"1").
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "fake" | "Fake" | "FAKE" | "0" => Ok(Label::Fake),
            "real" | "Real" | "REAL" | "1" => Ok(Label::Real),
            _ => Err(ParseLabelError),
        }
    }
}

/// Input string was not a recognizable label spelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("label must be one of fake/real/0/1")]
pub struct ParseLabelError;
