//! Percept-level associative memory.
//!
//! Each percept is a cell assembly. Relations between percepts live in one
//! complementary-input store per target percept, learned by replaying
//! sequences of percept contexts. Retrieval is spreading activation over
//! those stores, optionally steered by supplementary percepts, bias,
//! suppression and learned inhibitory gates.

mod graph;
mod interference;
mod prototype;
mod retrieval;

pub use graph::{InhibitoryUnit, Percept, RelationDelta, SemanticGraph, SemanticParams};
pub(crate) use graph::patterns;
pub use interference::{InterferenceReport, InterferenceVariant, PenguinSchema, ProtocolParams};
pub use prototype::RelationalPrototype;
pub use retrieval::{Activation, ReplayDirection, RetrievalMode, RetrievalRequest};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Visual,
    Auditory,
    Lexical,
    Emotional,
    Reward,
    Motor,
    Amodal,
}

impl Modality {
    pub const ALL: [Modality; 7] = [
        Modality::Visual,
        Modality::Auditory,
        Modality::Lexical,
        Modality::Emotional,
        Modality::Reward,
        Modality::Motor,
        Modality::Amodal,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Modality::Visual => "visual",
            Modality::Auditory => "auditory",
            Modality::Lexical => "lexical",
            Modality::Emotional => "emotional",
            Modality::Reward => "reward",
            Modality::Motor => "motor",
            Modality::Amodal => "amodal",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = SemanticError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let short = match s.as_str() {
            "vis" => "visual",
            "aud" => "auditory",
            "lex" => "lexical",
            "emo" => "emotional",
            other => other,
        };
        Modality::ALL
            .into_iter()
            .find(|m| m.as_str() == short)
            .ok_or(SemanticError::UnknownModality(s))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemanticError {
    #[error("percept `{0}` is already registered")]
    DuplicatePercept(String),
    #[error("unknown percept `{0}`")]
    UnknownPercept(String),
    #[error("percept label `{0}` exists in several modalities; qualify it as label(modality)")]
    AmbiguousPercept(String),
    #[error("unknown modality `{0}`")]
    UnknownModality(String),
    #[error("assembly size must be at least 1")]
    EmptyAssembly,
    #[error("a replay trace needs at least two contexts")]
    TraceTooShort,
    #[error("replay contexts must be nonempty")]
    EmptyContext,
    #[error("automatic retrieval takes exactly one seed and no supplementary, bias or suppression")]
    InvalidAutomatic,
    #[error("hop count must be at least 1")]
    ZeroHops,
    #[error("prototype observations must share one target and be nonempty")]
    BadObservations,
    #[error("the penguin schema has not been consolidated")]
    SchemaAbsent,
}
