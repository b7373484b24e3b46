use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::{OnsetClock, TemporalError, TemporalPercept};
use crate::cph::{CphParams, NeuronUnit, Pattern};
use crate::semantic::{RetrievalRequest, SemanticGraph};
use crate::{PerceptId, UnitId};

/// Pattern for temporal stores: an interned temporal element plus its
/// elapsed bin (0 for sequence cells and regular percepts).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimedPattern {
    pub unit: UnitId,
    pub elapsed: u32,
}

impl Pattern for TimedPattern {
    fn unit(&self) -> UnitId {
        self.unit
    }
    fn level(&self) -> u32 {
        self.elapsed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Element {
    Time(PerceptId),
    Sequence(Vec<PerceptId>),
    Regular(PerceptId),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemporalParams {
    /// ± elapsed-bin tolerance for time cells.
    pub tolerance: u32,
    /// Default firing threshold for a new target store.
    pub theta_t: f64,
    pub max_tuple: usize,
    /// Retrieval/match rounds in generalization.
    pub max_rounds: u32,
    pub retrieval_hops: u32,
    pub cph: CphParams,
}

impl Default for TemporalParams {
    fn default() -> Self {
        Self { tolerance: 1, theta_t: 3.0, max_tuple: 4, max_rounds: 3, retrieval_hops: 6, cph: CphParams::default() }
    }
}

/// Summary of a consolidated sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TemporalSequence {
    pub target: PerceptId,
    pub elements: Vec<TemporalPercept>,
    pub regular: Vec<PerceptId>,
    pub entries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum PredictionHop {
    Retrieve { from: PerceptId, activated: Vec<PerceptId> },
    Map { from: PerceptId, to: PerceptId, onset: u64 },
    Match { round: u32, fired: Vec<PerceptId> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub fired: Vec<(PerceptId, f64)>,
    pub trace: Vec<PredictionHop>,
}

impl Prediction {
    pub fn fired_ids(&self) -> Vec<PerceptId> {
        self.fired.iter().map(|f| f.0).collect()
    }
}

#[derive(Debug, Clone)]
pub struct TemporalEngine {
    elements: BTreeMap<Element, UnitId>,
    element_list: Vec<Element>,
    stores: BTreeMap<PerceptId, NeuronUnit<TimedPattern>>,
    pub clock: OnsetClock,
    pub params: TemporalParams,
}

impl TemporalEngine {
    pub fn new(params: TemporalParams) -> Self {
        Self {
            elements: BTreeMap::new(),
            element_list: Vec::new(),
            stores: BTreeMap::new(),
            clock: OnsetClock::new(params.max_tuple),
            params,
        }
    }

    fn intern(&mut self, e: Element) -> UnitId {
        if let Some(&u) = self.elements.get(&e) {
            return u;
        }
        let u = UnitId(self.element_list.len() as u32);
        self.element_list.push(e.clone());
        self.elements.insert(e, u);
        u
    }

    fn to_patterns(&self, active: &[TemporalPercept], regular: &[PerceptId]) -> Vec<TimedPattern> {
        let mut out = Vec::new();
        for t in active {
            let (e, elapsed) = match t {
                TemporalPercept::TimeCell { percept, elapsed } => (Element::Time(*percept), *elapsed),
                TemporalPercept::SequenceCell(v) => (Element::Sequence(v.clone()), 0),
            };
            if let Some(&unit) = self.elements.get(&e) {
                out.push(TimedPattern { unit, elapsed });
            }
        }
        for &p in regular {
            if let Some(&unit) = self.elements.get(&Element::Regular(p)) {
                out.push(TimedPattern { unit, elapsed: 0 });
            }
        }
        out
    }

    /// True when `p` occurs inside any learned temporal element.
    pub fn is_constituent(&self, p: PerceptId) -> bool {
        self.element_list.iter().any(|e| match e {
            Element::Time(q) | Element::Regular(q) => *q == p,
            Element::Sequence(v) => v.contains(&p),
        })
    }

    pub fn targets(&self) -> impl Iterator<Item = PerceptId> + '_ {
        self.stores.keys().copied()
    }

    pub fn store(&self, target: PerceptId) -> Option<&NeuronUnit<TimedPattern>> {
        self.stores.get(&target)
    }

    pub fn set_threshold(&mut self, target: PerceptId, theta: f64) {
        self.store_mut(target).threshold = theta;
    }

    fn store_mut(&mut self, target: PerceptId) -> &mut NeuronUnit<TimedPattern> {
        let mut cph = self.params.cph;
        cph.rate_tolerance = self.params.tolerance;
        let theta = self.params.theta_t;
        self.stores.entry(target).or_insert_with(|| NeuronUnit::new(UnitId(target.0), theta, cph))
    }

    /// Strengthens the time cells (relative to the target onset), sequence
    /// cells and regular context percepts preceding `target` onto it.
    pub fn consolidate_temporal_sequence(
        &mut self,
        episode: &[(PerceptId, u64)],
        target: PerceptId,
        target_tick: u64,
        context: &[PerceptId],
        repeats: u32,
    ) -> Result<TemporalSequence, TemporalError> {
        let before: Vec<(PerceptId, u64)> =
            episode.iter().copied().filter(|&(p, t)| t < target_tick || (t == target_tick && p != target)).collect();
        if before.is_empty() {
            return Err(TemporalError::NoPrecedingOnsets);
        }
        let elements = OnsetClock::from_onsets(&before, self.params.max_tuple).active(target_tick);
        let mut window = Vec::new();
        for t in &elements {
            let (e, elapsed) = match t {
                TemporalPercept::TimeCell { percept, elapsed } => (Element::Time(*percept), *elapsed),
                TemporalPercept::SequenceCell(v) => (Element::Sequence(v.clone()), 0),
            };
            window.push(TimedPattern { unit: self.intern(e), elapsed });
        }
        for &p in context {
            window.push(TimedPattern { unit: self.intern(Element::Regular(p)), elapsed: 0 });
        }
        let store = self.store_mut(target);
        let mut entries = 0;
        for _ in 0..repeats {
            entries = store.cph_update(&window, true).len();
        }
        Ok(TemporalSequence { target, elements, regular: context.to_vec(), entries })
    }

    /// Fired targets with their excitation, in id order.
    pub fn match_temporal_sequences(&self, active: &[TemporalPercept], regular: &[PerceptId]) -> Vec<(PerceptId, f64)> {
        let pats = self.to_patterns(active, regular);
        if pats.is_empty() {
            return Vec::new();
        }
        self.stores
            .iter()
            .filter_map(|(&t, s)| {
                let o = s.step(&pats);
                o.fired.then_some((t, o.excitation))
            })
            .collect()
    }

    /// Excitation of every target store, fired or not.
    pub fn excitations(&self, active: &[TemporalPercept], regular: &[PerceptId]) -> Vec<(PerceptId, f64)> {
        let pats = self.to_patterns(active, regular);
        self.stores.iter().map(|(&t, s)| (t, s.excitation(&pats))).collect()
    }

    /// Maps observed percepts onto stored constituents through semantic
    /// retrieval, re-stamps them with the observed onsets, and matches.
    /// Fired targets start their own onset at `now` and seed the next round.
    pub fn generalize_and_predict(
        &self,
        graph: &SemanticGraph,
        observed: &[(PerceptId, u64)],
        now: u64,
        supplementary: &[PerceptId],
        regular: &[PerceptId],
    ) -> Result<Prediction, TemporalError> {
        let mut stamps: Vec<(PerceptId, u64)> = observed.to_vec();
        let mut frontier = observed.to_vec();
        let mut fired: BTreeMap<PerceptId, f64> = BTreeMap::new();
        let mut trace = Vec::new();
        let skip: BTreeSet<PerceptId> = supplementary.iter().copied().collect();
        for round in 0..self.params.max_rounds.max(1) {
            for &(o, t) in &frontier {
                if !graph.contains(o) {
                    continue;
                }
                let req = RetrievalRequest::controlled(vec![o], supplementary.to_vec(), self.params.retrieval_hops);
                let act = graph.retrieve(&req)?;
                let activated: Vec<PerceptId> = act.retrieved().into_iter().filter(|p| !skip.contains(p)).collect();
                trace.push(PredictionHop::Retrieve { from: o, activated: activated.clone() });
                for c in activated {
                    if self.is_constituent(c) && !stamps.contains(&(c, t)) {
                        stamps.push((c, t));
                        trace.push(PredictionHop::Map { from: o, to: c, onset: t });
                    }
                }
            }
            let active = OnsetClock::from_onsets(&stamps, self.params.max_tuple).active(now);
            let hits = self.match_temporal_sequences(&active, regular);
            trace.push(PredictionHop::Match { round, fired: hits.iter().map(|h| h.0).collect() });
            let new: Vec<(PerceptId, f64)> = hits.into_iter().filter(|h| !fired.contains_key(&h.0)).collect();
            if new.is_empty() {
                break;
            }
            frontier = new.iter().map(|&(p, _)| (p, now)).collect();
            stamps.extend(frontier.iter().copied());
            fired.extend(new);
        }
        Ok(Prediction { fired: fired.into_iter().collect(), trace })
    }
}
