use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::{Arithmetic, OpsError, Region, RegionState};
use crate::executive::{ActionId, Executive, ExecutiveParams, PerceptLevel, PerceptLevelContext};
use crate::semantic::{RetrievalRequest, SemanticGraph, SemanticParams};
use crate::temporal::{EpisodicParams, EpisodicStore, OnsetClock, PredictionHop, TemporalEngine, TemporalParams};
use crate::PerceptId;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MachineParams {
    pub semantic: SemanticParams,
    pub temporal: TemporalParams,
    pub episodic: EpisodicParams,
    pub executive: ExecutiveParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UngateOutcome {
    Written,
    Blocked,
}

/// What a propagate produced.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Propagation {
    pub activated: Vec<PerceptId>,
    /// Selected action, for FFA.
    pub action: Option<ActionId>,
    /// Replayed contexts, for the hippocampus.
    pub sequence: Vec<Vec<PerceptId>>,
    /// Retrieval and match hops, for TPS.
    pub hops: Vec<PredictionHop>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepResult {
    Ok,
    Blocked,
    Protected(bool),
    Percepts(Vec<PerceptId>),
    Action(Option<ActionId>),
    Value(f64),
    Sequence(Vec<Vec<PerceptId>>),
}

/// One executed primitive or engine call.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub program: String,
    pub step: usize,
    pub tick: u64,
    pub primitive: String,
    pub region: Option<Region>,
    pub target: Option<Region>,
    pub operands: Vec<PerceptId>,
    pub result: StepResult,
}

/// A change of a region's contents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionWrite {
    pub tick: u64,
    pub region: Region,
    pub contents: Vec<PerceptId>,
}

/// All stores plus the named regions that gate them.
#[derive(Debug, Clone)]
pub struct Machine {
    pub graph: SemanticGraph,
    pub temporal: TemporalEngine,
    pub episodic: EpisodicStore,
    pub executive: Executive,
    regions: BTreeMap<Region, RegionState>,
    /// Derived executive percepts (flags, progress markers).
    pub abstract_executive: BTreeSet<PerceptId>,
    /// Visual rendering of a percept, e.g. a number as its digit sequence.
    pub imagery: BTreeMap<PerceptId, Vec<PerceptId>>,
    pub arithmetic: Option<Arithmetic>,
    pub tick: u64,
    log: Vec<StepRecord>,
    writes: Vec<RegionWrite>,
    program: String,
    step: usize,
}

impl Machine {
    pub fn new(params: MachineParams) -> Self {
        Self {
            graph: SemanticGraph::new(params.semantic),
            temporal: TemporalEngine::new(params.temporal),
            episodic: EpisodicStore::new(params.episodic),
            executive: Executive::new(params.executive),
            regions: Region::ALL.into_iter().map(|r| (r, RegionState::default())).collect(),
            abstract_executive: BTreeSet::new(),
            imagery: BTreeMap::new(),
            arithmetic: None,
            tick: 0,
            log: Vec::new(),
            writes: Vec::new(),
            program: String::new(),
            step: 0,
        }
    }

    pub fn region(&self, r: Region) -> &RegionState {
        &self.regions[&r]
    }

    pub fn contents(&self, r: Region) -> Vec<PerceptId> {
        self.regions[&r].contents.iter().copied().collect()
    }

    pub fn log(&self) -> &[StepRecord] {
        &self.log
    }

    pub fn writes(&self) -> &[RegionWrite] {
        &self.writes
    }

    /// Drains the step log.
    pub fn take_log(&mut self) -> Vec<StepRecord> {
        std::mem::take(&mut self.log)
    }

    pub(crate) fn begin(&mut self, program: &str) -> usize {
        self.program = program.to_owned();
        self.step = 0;
        self.log.len()
    }

    pub(crate) fn current_step(&self) -> usize {
        self.step
    }

    pub(crate) fn end(&mut self) {
        self.program.clear();
        self.step = 0;
    }

    fn record(&mut self, primitive: &str, region: Option<Region>, target: Option<Region>, operands: &[PerceptId], result: StepResult) {
        self.log.push(StepRecord {
            program: self.program.clone(),
            step: self.step,
            tick: self.tick,
            primitive: primitive.to_owned(),
            region,
            target,
            operands: operands.to_vec(),
            result,
        });
        self.step += 1;
        self.tick += 1;
    }

    /// Records an engine call made by a program that is not a primitive.
    pub(crate) fn note(&mut self, primitive: &str, region: Option<Region>, operands: &[PerceptId], result: StepResult) {
        self.record(primitive, region, None, operands, result);
    }

    fn write(&mut self, r: Region, payload: BTreeSet<PerceptId>) -> UngateOutcome {
        let st = self.regions.get_mut(&r).expect("all regions exist");
        if st.protected {
            return UngateOutcome::Blocked;
        }
        st.contents = payload;
        let contents = st.contents.iter().copied().collect();
        self.writes.push(RegionWrite { tick: self.tick, region: r, contents });
        UngateOutcome::Written
    }

    /// Percepts entering a region from outside (perception, task input).
    /// Protected regions block the write.
    pub fn load(&mut self, r: Region, percepts: &[PerceptId]) -> UngateOutcome {
        let out = self.write(r, percepts.iter().copied().collect());
        self.record("load", Some(r), None, percepts, outcome(out));
        out
    }

    /// Overwrites `target` with `payload`, which must be available in the
    /// sender's contents or last output.
    pub fn ungate(&mut self, sender: Region, target: Region, payload: &[PerceptId]) -> Result<UngateOutcome, OpsError> {
        let s = &self.regions[&sender];
        if let Some(&missing) = payload.iter().find(|p| !s.contents.contains(p) && !s.output.contains(p)) {
            return Err(OpsError::Gating { sender, missing });
        }
        let out = self.write(target, payload.iter().copied().collect());
        self.record("ungate", Some(sender), Some(target), payload, outcome(out));
        Ok(out)
    }

    pub fn protect(&mut self, r: Region) -> bool {
        self.set_protected(r, true);
        self.record("protect", Some(r), None, &[], StepResult::Protected(true));
        true
    }

    pub fn unprotect(&mut self, r: Region) -> bool {
        self.set_protected(r, false);
        self.record("unprotect", Some(r), None, &[], StepResult::Protected(false));
        false
    }

    fn set_protected(&mut self, r: Region, on: bool) {
        self.regions.get_mut(&r).expect("all regions exist").protected = on;
        match r {
            Region::Dlpfc => self.executive.relations.protected = on,
            Region::Rpfc => self.executive.prospective.protected = on,
            _ => {}
        }
    }

    /// Runs the store behind `region` on `percepts`, with the region's
    /// contents as supplementary context. The result lands in the region's
    /// output slot.
    pub fn propagate(&mut self, region: Region, percepts: &[PerceptId]) -> Result<Propagation, OpsError> {
        let contents: Vec<PerceptId> =
            self.regions[&region].contents.iter().copied().filter(|p| !percepts.contains(p)).collect();
        let mut all: BTreeSet<PerceptId> = percepts.iter().copied().collect();
        all.extend(contents.iter().copied());
        let prop = match region {
            Region::Atl => {
                let mut seed = percepts.to_vec();
                seed.sort();
                seed.dedup();
                if seed.is_empty() {
                    Propagation::default()
                } else {
                    let req = RetrievalRequest::controlled(seed, contents, self.graph.params.hop_cap);
                    Propagation { activated: self.graph.retrieve(&req)?.retrieved().into_iter().collect(), ..Default::default() }
                }
            }
            // Percepts arrive one per tick in the given order; matching happens
            // on the tick after the last one.
            Region::Tps => {
                let observed: Vec<(PerceptId, u64)> = percepts.iter().enumerate().map(|(i, &p)| (p, i as u64)).collect();
                let active = OnsetClock::from_onsets(&observed, self.temporal.params.max_tuple).active(percepts.len() as u64);
                let fired = self.temporal.match_temporal_sequences(&active, &contents);
                Propagation { activated: fired.into_iter().map(|f| f.0).collect(), ..Default::default() }
            }
            Region::Hippocampus => match self.episodic.recall(percepts, 1)? {
                Some(r) => {
                    let sequence: Vec<Vec<PerceptId>> = r.replay.map(|c| c.ids()).collect();
                    let set: BTreeSet<PerceptId> = sequence.iter().flatten().copied().collect();
                    Propagation { activated: set.into_iter().collect(), sequence, ..Default::default() }
                }
                None => Propagation::default(),
            },
            // The rule stores hold cues and commands, so their own contents
            // are not matching context.
            Region::Dlpfc => {
                let ctx: BTreeSet<PerceptId> = percepts.iter().copied().collect();
                Propagation { activated: self.executive.relations.match_rules(&ctx, self.tick), ..Default::default() }
            }
            Region::Rpfc => {
                let mut ctx: BTreeSet<PerceptId> = percepts.iter().copied().collect();
                ctx.extend(self.abstract_executive.iter().copied());
                Propagation { activated: self.executive.prospective.match_rules(&ctx, self.tick), ..Default::default() }
            }
            Region::Ffa => {
                let ctx = PerceptLevelContext::at(PerceptLevel::Conceptual, all.iter().copied());
                let (_, chosen) = self.executive.decide(&ctx);
                Propagation { action: chosen.map(|c| c.action), ..Default::default() }
            }
            other => return Err(OpsError::NoBackingStore(other)),
        };
        self.finish_propagate(region, percepts, prop)
    }

    /// Temporal prediction over explicitly timed observations, generalizing
    /// through retrieval with the supplementary percepts.
    pub fn propagate_timed(
        &mut self,
        observed: &[(PerceptId, u64)],
        now: u64,
        supplementary: &[PerceptId],
    ) -> Result<Propagation, OpsError> {
        let pred = self.temporal.generalize_and_predict(&self.graph, observed, now, supplementary, &[])?;
        let prop = Propagation { activated: pred.fired_ids(), hops: pred.trace, ..Default::default() };
        let ps: Vec<PerceptId> = observed.iter().map(|o| o.0).collect();
        self.finish_propagate(Region::Tps, &ps, prop)
    }

    fn finish_propagate(&mut self, region: Region, percepts: &[PerceptId], prop: Propagation) -> Result<Propagation, OpsError> {
        self.regions.get_mut(&region).expect("all regions exist").output = prop.activated.iter().copied().collect();
        let result = match region {
            Region::Ffa => StepResult::Action(prop.action.clone()),
            Region::Hippocampus => StepResult::Sequence(prop.sequence.clone()),
            _ => StepResult::Percepts(prop.activated.clone()),
        };
        self.record("propagate", Some(region), None, percepts, result);
        Ok(prop)
    }
}

fn outcome(o: UngateOutcome) -> StepResult {
    match o {
        UngateOutcome::Written => StepResult::Ok,
        UngateOutcome::Blocked => StepResult::Blocked,
    }
}
