use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use super::TemporalError;
use crate::semantic::{RetrievalRequest, SemanticGraph};
use crate::PerceptId;

/// How specific a remembered percept is; more specific percepts fade sooner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecificityClass {
    Sensory,
    Object,
    Scene,
    Concept,
    Event,
}

impl SpecificityClass {
    pub const ALL: [SpecificityClass; 5] = [
        SpecificityClass::Sensory,
        SpecificityClass::Object,
        SpecificityClass::Scene,
        SpecificityClass::Concept,
        SpecificityClass::Event,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SpecificityClass::Sensory => "sensory",
            SpecificityClass::Object => "object",
            SpecificityClass::Scene => "scene",
            SpecificityClass::Concept => "concept",
            SpecificityClass::Event => "event",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Ord, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TraceId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EpisodicContext {
    pub tick: u64,
    pub percepts: BTreeMap<PerceptId, SpecificityClass>,
}

impl EpisodicContext {
    pub fn ids(&self) -> Vec<PerceptId> {
        self.percepts.keys().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodicTrace {
    pub id: TraceId,
    pub contexts: Vec<EpisodicContext>,
    pub stored_at: u64,
    pub salient: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpisodicParams {
    /// Lifetimes in ticks for sensory, object, scene, concept and event percepts.
    pub lifetimes: [u64; 5],
    /// Fill degraded replay gaps by semantic retrieval from survivors.
    pub backfill: bool,
}

impl Default for EpisodicParams {
    fn default() -> Self {
        Self { lifetimes: [50, 200, 500, 2000, 10000], backfill: false }
    }
}

impl EpisodicParams {
    pub fn lifetime(&self, c: SpecificityClass) -> u64 {
        self.lifetimes[c as usize]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DegradationReport {
    pub removed: usize,
    pub dropped_contexts: usize,
}

/// Contexts replayed from a recall point onward.
#[derive(Debug, Clone)]
pub struct Replay {
    trace: Arc<EpisodicTrace>,
    next: usize,
}

impl Iterator for Replay {
    type Item = EpisodicContext;
    fn next(&mut self) -> Option<EpisodicContext> {
        let c = self.trace.contexts.get(self.next)?.clone();
        self.next += 1;
        Some(c)
    }
}

#[derive(Debug, Clone)]
pub struct Recall {
    pub trace_id: TraceId,
    pub offset: usize,
    pub matched: usize,
    pub replay: Replay,
}

#[derive(Debug, Clone, Default)]
pub struct EpisodicStore {
    traces: Vec<Arc<EpisodicTrace>>,
    next_id: u32,
    pub params: EpisodicParams,
}

impl EpisodicStore {
    pub fn new(params: EpisodicParams) -> Self {
        Self { traces: Vec::new(), next_id: 0, params }
    }

    pub fn store(
        &mut self,
        contexts: Vec<EpisodicContext>,
        stored_at: u64,
        salient: bool,
    ) -> Result<TraceId, TemporalError> {
        if contexts.is_empty() || contexts.iter().all(|c| c.percepts.is_empty()) {
            return Err(TemporalError::EmptyTrace);
        }
        if contexts.windows(2).any(|w| w[1].tick <= w[0].tick) {
            return Err(TemporalError::UnorderedContexts);
        }
        let id = TraceId(self.next_id);
        self.next_id += 1;
        self.traces.push(Arc::new(EpisodicTrace { id, contexts, stored_at, salient }));
        Ok(id)
    }

    pub fn get(&self, id: TraceId) -> Option<&EpisodicTrace> {
        self.traces.iter().find(|t| t.id == id).map(|t| t.as_ref())
    }

    pub fn traces(&self) -> impl Iterator<Item = &EpisodicTrace> {
        self.traces.iter().map(|t| t.as_ref())
    }

    /// Best-matching context across all traces; ties go to the most recently
    /// stored trace, then the earliest offset.
    pub fn recall(&self, cue: &[PerceptId], min_match: usize) -> Result<Option<Recall>, TemporalError> {
        if min_match < 1 {
            return Err(TemporalError::ZeroMinMatch);
        }
        let mut best: Option<(usize, u64, TraceId, usize, &Arc<EpisodicTrace>)> = None;
        for t in &self.traces {
            for (i, c) in t.contexts.iter().enumerate() {
                let m = cue.iter().filter(|p| c.percepts.contains_key(p)).count();
                if m < min_match {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bm, bs, bid, bi, _)) => {
                        (m, t.stored_at, t.id).cmp(&(bm, bs, bid)).then(bi.cmp(&i)).is_gt()
                    }
                };
                if better {
                    best = Some((m, t.stored_at, t.id, i, t));
                }
            }
        }
        Ok(best.map(|(matched, _, trace_id, offset, t)| Recall {
            trace_id,
            offset,
            matched,
            replay: Replay { trace: Arc::clone(t), next: offset },
        }))
    }

    /// Percepts of a replayed context, plus semantic reconstruction of the
    /// gaps when backfill is enabled.
    pub fn reconstruct(&self, ctx: &EpisodicContext, graph: &SemanticGraph) -> Result<Vec<PerceptId>, TemporalError> {
        let mut out = ctx.ids();
        if self.params.backfill && !out.is_empty() {
            let act = graph.retrieve(&RetrievalRequest::controlled(out.clone(), vec![], graph.params.hop_cap))?;
            out = act.active().into_iter().collect();
        }
        Ok(out)
    }

    /// Removes percepts whose class lifetime has passed from non-salient
    /// traces, dropping contexts left empty.
    pub fn degrade_traces(&mut self, now: u64) -> DegradationReport {
        let mut report = DegradationReport::default();
        let params = self.params;
        for t in &mut self.traces {
            if t.salient {
                continue;
            }
            let age = now.saturating_sub(t.stored_at);
            let doomed = |c: &SpecificityClass| age > params.lifetime(*c);
            if !t.contexts.iter().any(|c| c.percepts.values().any(doomed)) {
                continue;
            }
            let t = Arc::make_mut(t);
            for c in &mut t.contexts {
                let before = c.percepts.len();
                c.percepts.retain(|_, cl| !doomed(cl));
                report.removed += before - c.percepts.len();
            }
            let before = t.contexts.len();
            t.contexts.retain(|c| !c.percepts.is_empty());
            report.dropped_contexts += before - t.contexts.len();
        }
        report
    }

    /// `trace_id<TAB>tick<TAB>label(class),…` per context.
    pub fn dump(&self, label: impl Fn(PerceptId) -> String) -> String {
        let mut s = String::new();
        for t in &self.traces {
            for c in &t.contexts {
                let items: Vec<String> =
                    c.percepts.iter().map(|(p, cl)| format!("{}({})", label(*p), cl.as_str())).collect();
                let _ = writeln!(s, "{}\t{}\t{}", t.id.0, c.tick, items.join(","));
            }
        }
        s
    }
}
