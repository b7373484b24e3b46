use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::fmt;

use super::CphError;
use crate::UnitId;

/// Highest representable rate level.
pub const MAX_RATE: u8 = 9;

/// Anything a neuron store can key on: a unit plus a graded level.
///
/// Two patterns match when they sit on the same unit and their levels differ
/// by at most the store's tolerance.
pub trait Pattern: Copy + Ord + Eq + std::hash::Hash + fmt::Debug {
    fn unit(&self) -> UnitId;
    fn level(&self) -> u32;

    /// Patterns at level zero carry no activity and are never stored.
    fn is_silent(&self) -> bool {
        false
    }

    fn matches(&self, other: &Self, tolerance: u32) -> bool {
        self.unit() == other.unit() && self.level().abs_diff(other.level()) <= tolerance
    }
}

/// A presynaptic unit firing at a rate level in `0..=9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FiringPattern {
    unit: UnitId,
    rate: u8,
}

impl FiringPattern {
    pub fn new(unit: UnitId, rate: u8) -> Result<Self, CphError> {
        if rate > MAX_RATE {
            return Err(CphError::RateOutOfRange(rate));
        }
        Ok(Self { unit, rate })
    }

    /// Full-rate pattern, used for assembly-level relations.
    pub fn saturated(unit: UnitId) -> Self {
        Self { unit, rate: MAX_RATE }
    }

    pub fn rate(&self) -> u8 {
        self.rate
    }
}

impl Pattern for FiringPattern {
    fn unit(&self) -> UnitId {
        self.unit
    }
    fn level(&self) -> u32 {
        u32::from(self.rate)
    }
    fn is_silent(&self) -> bool {
        self.rate == 0
    }
}

impl fmt::Display for FiringPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.unit, self.rate)
    }
}

/// Canonical (sorted, deduplicated) set of patterns identifying a stored input.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternKey<P: Pattern>(SmallVec<[P; 6]>);

impl<P: Pattern> PatternKey<P> {
    pub fn new(patterns: impl IntoIterator<Item = P>) -> Self {
        let mut v: SmallVec<[P; 6]> = patterns.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn patterns(&self) -> &[P] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every pattern in the key has a matching pattern in `active`,
    /// which must be sorted.
    pub fn matched_by(&self, active: &[P], tolerance: u32) -> bool {
        self.0.iter().all(|p| {
            let start = active.partition_point(|a| a.unit() < p.unit());
            active[start..]
                .iter()
                .take_while(|a| a.unit() == p.unit())
                .any(|a| a.matches(p, tolerance))
        })
    }
}

impl fmt::Display for PatternKey<FiringPattern> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Sorts a window and drops silent and repeated patterns.
pub fn canonical_window<P: Pattern>(window: &[P]) -> Vec<P> {
    let mut v: Vec<P> = window.iter().copied().filter(|p| !p.is_silent()).collect();
    v.sort_unstable();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(u: u32, r: u8) -> FiringPattern {
        FiringPattern::new(UnitId(u), r).unwrap()
    }

    #[test]
    fn rate_above_nine_rejected() {
        assert_eq!(FiringPattern::new(UnitId(0), 10), Err(CphError::RateOutOfRange(10)));
    }

    #[test]
    fn key_is_canonical() {
        let a = PatternKey::new([fp(3, 1), fp(1, 2), fp(3, 1)]);
        let b = PatternKey::new([fp(1, 2), fp(3, 1)]);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "1:2,3:1");
    }

    #[test]
    fn tolerance_match() {
        let key = PatternKey::new([fp(1, 5), fp(2, 5)]);
        assert!(key.matched_by(&[fp(1, 4), fp(2, 6)], 1));
        assert!(!key.matched_by(&[fp(1, 3), fp(2, 5)], 1));
        assert!(!key.matched_by(&[fp(1, 5)], 1));
    }
}
