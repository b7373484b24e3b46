use serde::Serialize;

use super::TemporalError;
use crate::PerceptId;

/// A temporal percept derived from onset times.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalPercept {
    TimeCell { percept: PerceptId, elapsed: u32 },
    SequenceCell(Vec<PerceptId>),
}

/// Records percept onsets within one episode.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OnsetClock {
    onsets: Vec<(PerceptId, u64)>,
    last: Option<u64>,
    max_tuple: usize,
}

impl OnsetClock {
    pub fn new(max_tuple: usize) -> Self {
        Self { onsets: Vec::new(), last: None, max_tuple }
    }

    /// A clock preloaded with onsets, in the given order.
    pub fn from_onsets(onsets: &[(PerceptId, u64)], max_tuple: usize) -> Self {
        let mut v = onsets.to_vec();
        v.sort_by_key(|&(_, t)| t);
        Self { last: v.last().map(|o| o.1), onsets: v, max_tuple }
    }

    pub fn onsets(&self) -> &[(PerceptId, u64)] {
        &self.onsets
    }

    /// Records `newly_active` at `now` and returns the active temporal percepts.
    pub fn tick_ingest(&mut self, now: u64, newly_active: &[PerceptId]) -> Result<Vec<TemporalPercept>, TemporalError> {
        if let Some(last) = self.last {
            if now <= last {
                return Err(TemporalError::NonMonotonicTick { now, last });
            }
        }
        self.last = Some(now);
        let mut fresh = newly_active.to_vec();
        fresh.sort();
        fresh.dedup();
        self.onsets.extend(fresh.into_iter().map(|p| (p, now)));
        Ok(self.active(now))
    }

    /// Event boundary: forgets every onset.
    pub fn reset(&mut self) {
        self.onsets.clear();
    }

    /// Time cells for every onset at or before `now`, then every sequence
    /// tuple of 2..=max_tuple onsets with strictly increasing ticks.
    pub fn active(&self, now: u64) -> Vec<TemporalPercept> {
        let past: Vec<(PerceptId, u64)> = self.onsets.iter().copied().filter(|&(_, t)| t <= now).collect();
        let mut out: Vec<TemporalPercept> = past
            .iter()
            .map(|&(p, t)| TemporalPercept::TimeCell { percept: p, elapsed: (now - t) as u32 })
            .collect();
        let mut stack = Vec::new();
        tuples(&past, 0, &mut stack, self.max_tuple.max(2), &mut out);
        out.sort();
        out.dedup();
        out
    }
}

fn tuples(
    onsets: &[(PerceptId, u64)],
    start: usize,
    stack: &mut Vec<(PerceptId, u64)>,
    max: usize,
    out: &mut Vec<TemporalPercept>,
) {
    if stack.len() >= 2 {
        out.push(TemporalPercept::SequenceCell(stack.iter().map(|o| o.0).collect()));
    }
    if stack.len() == max {
        return;
    }
    for i in start..onsets.len() {
        if stack.last().is_some_and(|l| onsets[i].1 <= l.1) {
            continue;
        }
        stack.push(onsets[i]);
        tuples(onsets, i + 1, stack, max, out);
        stack.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tc(p: u32, e: u32) -> TemporalPercept {
        TemporalPercept::TimeCell { percept: PerceptId(p), elapsed: e }
    }

    #[test]
    fn bell_time_cell() {
        let mut c = OnsetClock::new(4);
        c.tick_ingest(10, &[PerceptId(0)]).unwrap();
        let a = c.tick_ingest(14, &[]).unwrap();
        assert_eq!(a, vec![tc(0, 4)]);
    }

    #[test]
    fn dog_energetic() {
        let mut c = OnsetClock::new(4);
        c.tick_ingest(0, &[PerceptId(1)]).unwrap();
        let a = c.tick_ingest(5, &[PerceptId(2)]).unwrap();
        assert!(a.contains(&tc(1, 5)) && a.contains(&tc(2, 0)));
        assert!(a.contains(&TemporalPercept::SequenceCell(vec![PerceptId(1), PerceptId(2)])));
    }

    #[test]
    fn reset_and_monotonic() {
        let mut c = OnsetClock::new(4);
        c.tick_ingest(3, &[PerceptId(1)]).unwrap();
        assert!(c.tick_ingest(3, &[]).is_err());
        c.reset();
        assert!(c.tick_ingest(4, &[]).unwrap().is_empty());
    }

    #[test]
    fn same_tick_onsets_form_no_tuple() {
        let c = OnsetClock::from_onsets(&[(PerceptId(1), 0), (PerceptId(2), 0)], 4);
        assert_eq!(c.active(1).len(), 2);
    }

    #[test]
    fn tuple_lengths_capped() {
        let ons: Vec<_> = (0..6).map(|i| (PerceptId(i), u64::from(i))).collect();
        let a = OnsetClock::from_onsets(&ons, 4).active(6);
        let max = a
            .iter()
            .filter_map(|t| match t {
                TemporalPercept::SequenceCell(v) => Some(v.len()),
                _ => None,
            })
            .max();
        assert_eq!(max, Some(4));
        // 6 time cells + C(6,2) + C(6,3) + C(6,4)
        assert_eq!(a.len(), 6 + 15 + 20 + 15);
    }
}
