//! Complementary plasticity kernel.
//!
//! A neuron keeps a store of *complementary inputs*: subsets of the presynaptic
//! firing patterns that were active when it fired, each with a weight. When the
//! neuron fires, every nonempty subset of the current window is potentiated.
//! When it stays silent, every stored input that the window fully matches is
//! depressed. Excitation is the sum of weights of fully matched stored inputs.
//!
//! The store is generic over [`Pattern`] so that the same arithmetic serves
//! rate-coded visual units ([`FiringPattern`]) and the temporal engine's time
//! and sequence cells.

mod enumerate;
mod neuron;
mod pattern;

pub use enumerate::{enumerate_complementary_inputs, enumerate_subsets, subset_count};
pub use neuron::{inhibitory_update, NeuronUnit, StepOutcome, WeightDelta};
pub use pattern::{canonical_window, FiringPattern, Pattern, PatternKey, MAX_RATE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::UnitId;

/// Failures raised by the kernel.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CphError {
    #[error("presynaptic window is empty")]
    EmptyWindow,
    #[error("unit {0} appears more than once in the window")]
    DuplicateUnit(UnitId),
    #[error("rate level {0} is outside 0..=9")]
    RateOutOfRange(u8),
    #[error("window of {size} patterns exceeds the enumeration limit of {limit}")]
    EnumerationBlowup { size: usize, limit: usize },
}

/// How many subset orders a potentiation step enumerates.
///
/// Windows with at most `full_up_to` patterns are enumerated completely. Larger
/// windows contribute every subset of size at most `cap` plus the full window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderPolicy {
    pub full_up_to: usize,
    pub cap: usize,
}

impl Default for OrderPolicy {
    fn default() -> Self {
        Self { full_up_to: 8, cap: 2 }
    }
}

impl OrderPolicy {
    /// The order cap to use for a window of `len` patterns, or `None` for full
    /// enumeration.
    pub fn cap_for(&self, len: usize) -> Option<usize> {
        if len <= self.full_up_to.min(DEFAULT_HARD_LIMIT) {
            None
        } else {
            Some(self.cap.max(1))
        }
    }
}

/// Largest window that may be enumerated without an order cap.
pub const DEFAULT_HARD_LIMIT: usize = 16;

/// Learning constants shared by every store.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CphParams {
    /// Potentiation step on firing.
    pub eta_plus: f64,
    /// Depression step on silence.
    pub eta_minus: f64,
    /// Upper bound on any single weight.
    pub w_max: f64,
    /// Level distance within which two patterns on the same unit match.
    pub rate_tolerance: u32,
    pub order: OrderPolicy,
}

impl Default for CphParams {
    fn default() -> Self {
        Self {
            eta_plus: 1.0,
            eta_minus: 0.25,
            w_max: 100.0,
            rate_tolerance: 1,
            order: OrderPolicy::default(),
        }
    }
}
