//! Time cells, sequence cells and episodic memory.
//!
//! An onset clock timestamps percepts as they appear. From it the engine
//! derives time cells `⟨p, elapsed⟩` and sequence cells `⟨p1, p2, …⟩` (percepts
//! in onset order). Temporal sequences are complementary-input stores over
//! those temporal percepts, one per predicted target. Episodic traces are
//! verbatim sequences of percept contexts that degrade by specificity.

mod clock;
mod episodic;
mod sequence;

pub use clock::{OnsetClock, TemporalPercept};
pub use episodic::{
    DegradationReport, EpisodicContext, EpisodicParams, EpisodicStore, EpisodicTrace, Recall,
    Replay, SpecificityClass, TraceId,
};
pub use sequence::{Prediction, PredictionHop, TemporalEngine, TemporalParams, TemporalSequence, TimedPattern};

use thiserror::Error;

use crate::semantic::SemanticError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TemporalError {
    #[error("tick {now} does not follow tick {last}")]
    NonMonotonicTick { now: u64, last: u64 },
    #[error("target has no onsets before it")]
    NoPrecedingOnsets,
    #[error("episodic trace is empty")]
    EmptyTrace,
    #[error("episodic context ticks must strictly increase")]
    UnorderedContexts,
    #[error("min_match must be at least 1")]
    ZeroMinMatch,
    #[error(transparent)]
    Semantic(#[from] SemanticError),
}
