//! Deterministic, tick-based engine for a complementary-plasticity model of
//! cognition.
//!
//! The crate is layered bottom-up:
//!
//! * [`cph`] – the complementary plasticity kernel shared by every module.
//! * [`vps`] – a four-layer visual hierarchy with lateral invariance learning.
//! * [`semantic`] – percept registry, relations, spreading-activation retrieval.
//! * [`temporal`] – time cells, sequence cells and episodic traces.
//! * [`executive`] – action selection, rule stores and reward prediction.
//! * [`ops`] – the Ungate/Protect/Propagate machine and scripted programs.
//!
//! Nothing here reads a clock or an entropy source; randomness is always passed
//! in by the caller.

pub mod cph;
pub mod executive;
pub mod ids;
pub mod ops;
pub mod semantic;
pub mod temporal;
pub mod vps;

pub use ids::{PerceptId, UnitId};
