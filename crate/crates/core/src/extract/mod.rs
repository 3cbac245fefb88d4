//! Token labelling (BIO over PER/ORG/LOC/MISC), mention decoding,
//! canonicalization into entities, and span-level evaluation.

mod baseline;
mod canonical;
mod decode;
mod eval;
mod external;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baseline::{label_tokens, Gazetteer};
pub use canonical::canonicalize;
pub use decode::{decode_mentions, encode_spans, is_valid_bio, repair_bio};
pub use eval::{evaluate, predict_baseline, ExtractorEval, LabelCounts};
pub use external::{ExternalExtractor, ExtractorEndpoint, Extracted};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityLabel {
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "ORG")]
    Org,
    #[serde(rename = "LOC")]
    Loc,
    #[serde(rename = "MISC")]
    Misc,
}

impl EntityLabel {
    pub const ALL: [EntityLabel; 4] = [EntityLabel::Per, EntityLabel::Org, EntityLabel::Loc, EntityLabel::Misc];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityLabel::Per => "PER",
            EntityLabel::Org => "ORG",
            EntityLabel::Loc => "LOC",
            EntityLabel::Misc => "MISC",
        }
    }
}

impl fmt::Display for EntityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityLabel {
    type Err = ExtractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PER" => Ok(EntityLabel::Per),
            "ORG" => Ok(EntityLabel::Org),
            "LOC" => Ok(EntityLabel::Loc),
            "MISC" => Ok(EntityLabel::Misc),
            other => Err(ExtractError::BadTag(other.to_string())),
        }
    }
}

/// One token's label in the Begin/Inside/Outside scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BioTag {
    O,
    B(EntityLabel),
    I(EntityLabel),
}

impl BioTag {
    pub fn label(self) -> Option<EntityLabel> {
        match self {
            BioTag::O => None,
            BioTag::B(l) | BioTag::I(l) => Some(l),
        }
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioTag::O => f.write_str("O"),
            BioTag::B(l) => write!(f, "B-{l}"),
            BioTag::I(l) => write!(f, "I-{l}"),
        }
    }
}

impl FromStr for BioTag {
    type Err = ExtractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(BioTag::O);
        }
        let bad = || ExtractError::BadTag(s.to_string());
        let (prefix, label) = s.split_once('-').ok_or_else(bad)?;
        let label: EntityLabel = label.parse().map_err(|_| bad())?;
        match prefix {
            "B" => Ok(BioTag::B(label)),
            "I" => Ok(BioTag::I(label)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for BioTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BioTag {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A labelled span inside one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    pub label: EntityLabel,
    pub doc_id: String,
    /// Token ordinals, end exclusive.
    pub token_span: (usize, usize),
    /// Code-point offsets, end exclusive.
    pub char_span: (usize, usize),
}

/// Canonical identity of an entity: normalized lowercase surface plus label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityKey {
    pub surface: String,
    pub label: EntityLabel,
}

impl EntityKey {
    /// Lowercased surface tokens joined by single spaces.
    pub fn from_surface(surface: &str, label: EntityLabel) -> Self {
        EntityKey {
            surface: crate::text::terms(surface).join(" "),
            label,
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.surface.split(' ').filter(|t| !t.is_empty())
    }
}

/// Rendered as `LABEL:surface`, e.g. `ORG:acme corp`.
impl fmt::Display for EntityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.label, self.surface)
    }
}

impl FromStr for EntityKey {
    type Err = ExtractError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (label, surface) = s
            .split_once(':')
            .ok_or_else(|| ExtractError::BadKey(s.to_string()))?;
        let label: EntityLabel = label.parse().map_err(|_| ExtractError::BadKey(s.to_string()))?;
        Ok(EntityKey {
            surface: surface.to_string(),
            label,
        })
    }
}

impl Serialize for EntityKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EntityKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All mentions sharing one canonical key, across documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub key: EntityKey,
    pub display: String,
    pub label: EntityLabel,
    pub mentions: Vec<EntityMention>,
    pub doc_ids: BTreeSet<String>,
    pub score: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("invalid BIO tag `{0}`")]
    BadTag(String),
    #[error("invalid entity key `{0}`")]
    BadKey(String),
    #[error("{tags} tags for {tokens} tokens")]
    LengthMismatch { tags: usize, tokens: usize },
    #[error("token {position} does not match document `{doc_id}`")]
    TokenMismatch { doc_id: String, position: usize },
    #[error("gazetteer {path}:{line}: {message}")]
    Gazetteer { path: String, line: usize, message: String },
    #[error("gold and predictions differ: {0}")]
    DocumentMismatch(String),
    #[error("extractor timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("extractor transport error: {0}")]
    Transport(String),
    #[error("malformed extractor response: {0}")]
    MalformedResponse(String),
}
