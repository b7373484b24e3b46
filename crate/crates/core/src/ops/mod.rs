//! Executive primitives over named regions and the programs built from them.
//!
//! A [`Machine`] owns every store. `ungate` copies percepts between regions
//! (overwriting the target unless it is protected), `protect`/`unprotect`
//! toggle the lock, and `propagate` runs the store a region stands for.
//! Programs are fixed sequences of these calls; each call is one tick and one
//! [`StepRecord`].

mod arithmetic;
mod machine;
mod programs;
mod region;

pub use arithmetic::{arithmetic_percepts, Arithmetic, ArithmeticReport, FACT_THRESHOLD};
pub use machine::{Machine, MachineParams, Propagation, RegionWrite, StepRecord, StepResult, UngateOutcome};
pub use programs::{ProgramCall, ProgramOutput, Prospect};
pub use region::{Region, RegionState};

use thiserror::Error;

use crate::executive::ExecutiveError;
use crate::semantic::SemanticError;
use crate::temporal::TemporalError;
use crate::PerceptId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpsError {
    #[error("percept {missing} is not available in {sender}")]
    Gating { sender: Region, missing: PerceptId },
    #[error("{0} has no backing store")]
    NoBackingStore(Region),
    #[error("program `{0}` is not implemented")]
    NotImplemented(&'static str),
    #[error("arithmetic percepts are not installed")]
    NoArithmetic,
    #[error("program `{program}` failed at step {step}: {reason}")]
    ProgramFailed { program: String, step: usize, reason: String, completed: Vec<StepRecord> },
    #[error(transparent)]
    Semantic(#[from] SemanticError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error(transparent)]
    Executive(#[from] ExecutiveError),
}
