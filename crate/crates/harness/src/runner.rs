//! Deterministic execution of a parsed scenario.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use cogsim_core::executive::{
    Action, ActionId, ConditioningTrial, ContextKey, ExecutiveError, PerceptLevel, PerceptLevelContext, TdStep,
};
use cogsim_core::ops::{Machine, OpsError, ProgramOutput, Region, StepRecord, StepResult};
use cogsim_core::semantic::{PenguinSchema, RetrievalMode, RetrievalRequest, SemanticError};
use cogsim_core::temporal::{EpisodicContext, PredictionHop, TemporalError};
use cogsim_core::vps::{FeatureStimulus, Hierarchy, MovingObjectProtocol, VpsError};
use cogsim_core::{PerceptId, UnitId};

use crate::assertion::{Assertion, AssertionOutcome};
use crate::scenario::*;
use crate::stats::{mean, pearson};
use crate::trace::{Trace, FIRED};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Semantic(#[from] SemanticError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error(transparent)]
    Executive(#[from] ExecutiveError),
    #[error(transparent)]
    Vps(#[from] VpsError),
    #[error(transparent)]
    Ops(#[from] OpsError),
    #[error("tick {tick} exceeds the limit of {limit}")]
    TickLimit { tick: u64, limit: u64 },
    #[error("no `visual` declaration")]
    NoVisual,
    #[error("unknown shape `{0}`")]
    UnknownShape(String),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Overrides the scenario seed.
    pub seed: Option<u64>,
    pub max_ticks: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Counters {
    pub phases: usize,
    pub ticks: u64,
    pub records: usize,
    pub fired: usize,
    pub assertions: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseTiming {
    pub index: usize,
    pub kind: &'static str,
    pub op: String,
    pub micros: u128,
}

/// Outcome of one run. Timings are wall-clock and never enter the trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub passed: bool,
    pub assertions: Vec<AssertionOutcome>,
    pub results: BTreeMap<String, Value>,
    pub counters: Counters,
    pub timings: Vec<PhaseTiming>,
    /// Runtime error that aborted the run, with the phase it happened in.
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub report: Report,
    pub trace: Trace,
}

/// Runs every phase in order, then the top-level assertions. A runtime error
/// stops the run; the report keeps everything gathered up to that point.
pub fn run_scenario(sc: &Scenario, opts: &RunOptions) -> Run {
    let seed = opts.seed.unwrap_or(sc.seed);
    let mut r = Runner {
        sc,
        m: Machine::new(sc.params),
        vps: None,
        rng: ChaCha8Rng::seed_from_u64(seed),
        trace: Trace::default(),
        results: BTreeMap::new(),
        outcomes: Vec::new(),
        max_ticks: opts.max_ticks,
        fired: 0,
    };
    let mut timings = Vec::new();
    let mut error = r.setup(seed).err().map(|e| format!("setup: {e}"));
    if error.is_none() {
        for (i, ph) in sc.phases.iter().enumerate() {
            let t0 = Instant::now();
            let res = r.phase(i, ph);
            timings.push(PhaseTiming { index: i, kind: ph.kind(), op: op_name(ph).to_owned(), micros: t0.elapsed().as_micros() });
            if let Err(e) = res {
                error = Some(format!("phases[{i}] ({} {}): {e}", ph.kind(), op_name(ph)));
                break;
            }
        }
    }
    if error.is_none() {
        r.check(&sc.assertions);
    }
    let failed = r.outcomes.iter().filter(|o| !o.passed).count();
    let counters = Counters {
        phases: timings.len(),
        ticks: r.m.tick,
        records: r.trace.len(),
        fired: r.fired,
        assertions: r.outcomes.len(),
        failed,
    };
    let report = Report {
        scenario: sc.name.clone(),
        seed,
        passed: error.is_none() && failed == 0,
        assertions: r.outcomes,
        results: r.results,
        counters,
        timings,
        error,
    };
    Run { report, trace: r.trace }
}

fn op_name(ph: &Phase) -> &str {
    match ph {
        Phase::Train(op) => op.name(),
        Phase::Replay(op) => op.name(),
        Phase::Probe(p) => p.op.name(),
        Phase::Program(p) => p.call.name(),
        Phase::Assert(_) => "assert",
    }
}

struct Runner<'a> {
    sc: &'a Scenario,
    m: Machine,
    vps: Option<Hierarchy>,
    rng: ChaCha8Rng,
    trace: Trace,
    results: BTreeMap<String, Value>,
    outcomes: Vec<AssertionOutcome>,
    max_ticks: Option<u64>,
    fired: usize,
}

impl Runner<'_> {
    fn emit(&mut self, module: &str, event: &str, payload: Value) {
        self.trace.push(self.m.tick, module, event, payload);
    }

    fn emit_at(&mut self, tick: u64, module: &str, event: &str, payload: Value) {
        self.trace.push(tick, module, event, payload);
    }

    fn emit_fired(&mut self, tick: u64, module: &str, source: &str, items: Vec<String>) {
        if items.is_empty() {
            return;
        }
        self.fired += 1;
        self.trace.push(tick, module, FIRED, json!({ "source": source, "items": items }));
    }

    fn ids(&self, refs: &[PRef]) -> Result<Vec<PerceptId>, RunError> {
        refs.iter().map(|r| self.id(r)).collect()
    }

    fn id(&self, r: &str) -> Result<PerceptId, RunError> {
        Ok(self.m.graph.resolve(r)?)
    }

    fn label(&self, p: PerceptId) -> String {
        self.m.graph.label(p).to_owned()
    }

    fn labels(&self, ps: impl IntoIterator<Item = PerceptId>) -> Vec<String> {
        ps.into_iter().map(|p| self.label(p)).collect()
    }

    fn vps(&mut self) -> Result<&mut Hierarchy, RunError> {
        self.vps.as_mut().ok_or(RunError::NoVisual)
    }

    fn unit_names(&self, ids: &BTreeSet<UnitId>) -> Vec<String> {
        self.vps.as_ref().map(|h| h.names_of(ids)).unwrap_or_default()
    }

    fn stim(&self, s: &StimRef) -> Result<FeatureStimulus, RunError> {
        let h = self.vps.as_ref().ok_or(RunError::NoVisual)?;
        let v = self.sc.visual.as_ref().ok_or(RunError::NoVisual)?;
        match &s.shape {
            None => Ok(FeatureStimulus::blank(h.width(), h.height())),
            Some(name) => {
                let shape = v.shapes.get(name).ok_or_else(|| RunError::UnknownShape(name.clone()))?;
                Ok(shape.render(h.width(), h.height(), s.at.0, s.at.1)?)
            }
        }
    }

    fn advance(&mut self, ticks: u64) -> Result<(), RunError> {
        self.m.tick += ticks;
        match self.max_ticks {
            Some(limit) if self.m.tick > limit => Err(RunError::TickLimit { tick: self.m.tick, limit }),
            _ => Ok(()),
        }
    }

    fn setup(&mut self, seed: u64) -> Result<(), RunError> {
        let sc = self.sc;
        for p in &sc.percepts {
            self.m.graph.ensure(&p.label, p.modality);
        }
        if let Some(v) = &sc.visual {
            let mut h = Hierarchy::new(v.width, v.height, v.params);
            for u in &v.units {
                let id = h.add_unit(&u.name, u.layer, u.rf, u.threshold)?;
                h.unit_mut(id).neuron.homeostatic_target = u.homeostatic_target;
            }
            for (pre, post, w) in &v.inhibitory {
                let (a, b) = (h.id(pre)?, h.id(post)?);
                h.set_inhibitory(a, b, *w)?;
            }
            self.vps = Some(h);
        }
        for a in &sc.actions {
            let action = match (&a.external, a.internal) {
                (Some(motor), _) => Action::external(&a.id, motor),
                (None, Some(op)) => Action::internal(&a.id, op, a.region, self.ids(&a.payload)?),
                (None, None) => unreachable!("validated"),
            };
            self.m.executive.ffa.register(action)?;
        }
        for s in &sc.suppressors {
            let id = self.id(s)?;
            self.m.executive.suppressors.insert(id);
        }
        for (p, &v) in &sc.rewards {
            let id = self.id(p)?;
            self.m.executive.reward.set_received(id, v);
        }
        let payload = json!({
            "name": sc.name,
            "seed": seed,
            "percepts": sc.percepts.len(),
            "actions": sc.actions.len(),
            "phases": sc.phases.len(),
            "visual_units": sc.visual.as_ref().map_or(0, |v| v.units.len()),
        });
        self.emit("scenario", "start", payload);
        Ok(())
    }

    fn phase(&mut self, i: usize, ph: &Phase) -> Result<(), RunError> {
        self.emit("scenario", "phase", json!({ "index": i, "kind": ph.kind(), "op": op_name(ph) }));
        match ph {
            Phase::Train(op) => self.train(op)?,
            Phase::Replay(op) => self.replay(op)?,
            Phase::Probe(p) => {
                let v = self.probe(&p.op)?;
                self.emit("scenario", "probe", json!({ "name": p.name, "op": p.op.name(), "result": v }));
                self.results.insert(p.name.clone(), v);
            }
            Phase::Program(p) => self.program(p)?,
            Phase::Assert(a) => self.check(&a.assertions),
        }
        self.advance(1)
    }

    fn check(&mut self, assertions: &[Assertion]) {
        for a in assertions {
            let out = a.evaluate(&self.results);
            self.emit("scenario", "assert", json!({ "name": out.name, "passed": out.passed, "observed": out.observed }));
            self.outcomes.push(out);
        }
    }

    fn train(&mut self, op: &TrainOp) -> Result<(), RunError> {
        match op {
            TrainOp::Relation { sources, target, repeats, fired } => {
                let (src, t) = (self.ids(sources)?, self.id(target)?);
                for _ in 0..*repeats {
                    self.m.graph.relation_update(&src, t, *fired);
                }
                let payload = json!({
                    "sources": self.labels(src.iter().copied()),
                    "target": self.label(t),
                    "fired": fired,
                    "repeats": repeats,
                    "weight": self.m.graph.weight(&src, t),
                });
                self.emit("semantic", "relation", payload);
            }
            TrainOp::PenguinSchema { params } => {
                let s = PenguinSchema::consolidate(&mut self.m.graph, params)?;
                let payload = json!({
                    "percepts": self.labels([s.penguin, s.mynah, s.bird, s.fly, s.cannot_fly, s.water, s.blubber]),
                    "leak": s.mynah_leak(&self.m.graph),
                });
                self.emit("semantic", "schema", payload);
            }
            TrainOp::TemporalSequence { episode, target, target_tick, context, repeats, threshold } => {
                let ep = episode.iter().map(|(p, t)| Ok((self.id(p)?, *t))).collect::<Result<Vec<_>, RunError>>()?;
                let (t, ctx) = (self.id(target)?, self.ids(context)?);
                let seq = self.m.temporal.consolidate_temporal_sequence(&ep, t, *target_tick, &ctx, *repeats)?;
                if let Some(theta) = threshold {
                    self.m.temporal.set_threshold(t, *theta);
                }
                let payload = json!({ "target": self.label(t), "elements": seq.elements.len(), "entries": seq.entries });
                self.emit("temporal", "sequence", payload);
            }
            TrainOp::Episode { contexts, salient } => {
                let mut ctxs = Vec::with_capacity(contexts.len());
                for c in contexts {
                    let percepts = c.percepts.iter().map(|(p, &cl)| Ok((self.id(p)?, cl))).collect::<Result<_, RunError>>()?;
                    ctxs.push(EpisodicContext { tick: c.tick, percepts });
                }
                let id = self.m.episodic.store(ctxs, self.m.tick, *salient)?;
                self.emit("temporal", "episode", json!({ "trace": id, "contexts": contexts.len(), "salient": salient }));
            }
            TrainOp::Value { context, value } => {
                let key = ContextKey::of_percepts(self.ids(context)?);
                self.m.executive.reward.set_value(key, *value);
                self.emit("executive", "value", json!({ "context": context, "value": value }));
            }
            TrainOp::Ffa { context, action, repeats } => {
                let ctx = self.ids(context)?;
                let id = ActionId::from(action.as_str());
                self.m.executive.ffa.associate(&ctx, &id, *repeats)?;
                let score = self.m.executive.ffa.score(&ctx, &id);
                self.emit("executive", "associate", json!({ "context": context, "action": action, "score": score }));
            }
            TrainOp::Babble { contexts, steps } => {
                let ctxs = contexts.iter().map(|c| self.ids(c)).collect::<Result<Vec<_>, _>>()?;
                let pairs = self.m.executive.motor_babble(&mut self.rng, &ctxs, *steps);
                let pairs: Vec<Value> = pairs.into_iter().map(|(i, a)| json!([i, a])).collect();
                self.emit("executive", "babble", json!({ "pairs": pairs }));
            }
            TrainOp::Conditioning { cue, reward, reward_tick, ticks, trials } => {
                for n in 0..*trials {
                    self.trial(n, cue, reward.as_deref(), *reward_tick, *ticks)?;
                }
                return Ok(());
            }
            TrainOp::Arithmetic { withheld } => {
                let facts = self.m.install_arithmetic(withheld)?.facts.len();
                self.emit("ops", "arithmetic", json!({ "facts": facts, "withheld": withheld }));
            }
            TrainOp::VpsTune { unit, stim, repeats } => {
                let s = self.stim(stim)?;
                let h = self.vps()?;
                let id = h.id(unit)?;
                h.tune(id, &s, *repeats)?;
                self.emit("vps", "tune", json!({ "unit": unit, "repeats": repeats }));
            }
            TrainOp::VpsInvariance { shape, trajectory, passes, gap_ticks } => {
                let v = self.sc.visual.as_ref().ok_or(RunError::NoVisual)?;
                let shape_t = v.shapes.get(shape).ok_or_else(|| RunError::UnknownShape(shape.clone()))?.clone();
                let proto =
                    MovingObjectProtocol { shape: shape_t, trajectory: trajectory.clone(), passes: *passes, gap_ticks: *gap_ticks };
                let rep = self.vps()?.run_invariance_protocol(&proto)?;
                for (k, fired) in rep.ticks.iter().enumerate() {
                    let names = self.unit_names(fired);
                    self.emit_fired(self.m.tick + k as u64, "vps", "invariance", names);
                }
                self.advance(rep.ticks.len() as u64)?;
                let assembly = rep.assembly.map(|a| self.unit_names(&a.members));
                self.emit("vps", "invariance", json!({ "shape": shape, "passes": passes, "assembly": assembly }));
            }
            TrainOp::VpsStream { sequence, cycles } => {
                let stims = sequence.iter().map(|s| self.stim(s)).collect::<Result<Vec<_>, _>>()?;
                for _ in 0..*cycles {
                    for s in &stims {
                        let fired = self.vps()?.step(s)?.fired();
                        let names = self.unit_names(&fired);
                        self.emit_fired(self.m.tick, "vps", "stream", names);
                        self.advance(1)?;
                    }
                }
                self.emit("vps", "stream", json!({ "ticks": stims.len() as u64 * u64::from(*cycles) }));
            }
        }
        Ok(())
    }

    /// One conditioning trial; each TD step takes one tick.
    fn trial(&mut self, n: u32, cue: &str, reward: Option<&str>, reward_tick: u64, ticks: u64) -> Result<Vec<TdStep>, RunError> {
        let cue_id = self.id(cue)?;
        let reward_id = reward.map(|r| self.id(r)).transpose()?;
        let t = ConditioningTrial { cue: cue_id, reward: reward_id.map(|r| (r, reward_tick)), ticks };
        let steps = self.m.executive.run_conditioning_trial(&t, Some(&mut self.m.graph));
        for (k, s) in steps.iter().enumerate() {
            let payload = json!({
                "trial": n,
                "step": k,
                "reward": s.reward,
                "v_prev": s.v_prev,
                "v_now": s.v_now,
                "delta": s.delta,
            });
            self.emit_at(self.m.tick + k as u64, "executive", "td", payload);
        }
        self.advance(ticks)?;
        let mut payload = json!({ "trial": n, "cue": cue, "ticks": ticks });
        if let Some(r) = reward_id {
            payload["reward"] = json!(self.label(r));
            payload["weight"] = json!(self.m.graph.weight(&[cue_id], r));
        }
        self.emit("executive", "trial", payload);
        Ok(steps)
    }

    fn replay(&mut self, op: &ReplayOp) -> Result<(), RunError> {
        match op {
            ReplayOp::Semantic { trace, direction, repeats } => {
                let ctxs = trace.iter().map(|c| self.ids(c)).collect::<Result<Vec<_>, _>>()?;
                let deltas = self.m.graph.consolidate_replay(&ctxs, *direction, *repeats)?;
                let mut weights = Map::new();
                for d in &deltas {
                    let key = format!("{}>{}", self.labels(d.key.iter().copied()).join("+"), self.label(d.target));
                    weights.insert(key, json!(d.after));
                }
                self.emit("semantic", "replay", json!({ "contexts": trace.len(), "updates": deltas.len(), "weights": weights }));
            }
            ReplayOp::Interference { variant, params } => {
                let rep = self.m.graph.apply_interference_protocol(*variant, params)?;
                self.emit("semantic", "interference", serde_json::to_value(rep).expect("plain data"));
            }
            ReplayOp::Age { elapsed } => {
                self.advance(*elapsed)?;
                let rep = self.m.episodic.degrade_traces(self.m.tick);
                self.emit("temporal", "degrade", serde_json::to_value(rep).expect("plain data"));
            }
        }
        Ok(())
    }

    fn probe(&mut self, op: &ProbeOp) -> Result<Value, RunError> {
        Ok(match op {
            ProbeOp::Retrieve { seed, supplementary, bias, suppress, hops, mode } => {
                let g = &self.m.graph;
                let hops = hops.unwrap_or(g.params.hop_cap);
                let plain = seed.len() == 1 && supplementary.is_empty() && bias.is_empty() && suppress.is_empty();
                let mode = mode.unwrap_or(if plain { RetrievalMode::Automatic } else { RetrievalMode::Controlled });
                let mut req = match mode {
                    RetrievalMode::Automatic => RetrievalRequest::automatic(self.id(&seed[0])?, hops),
                    RetrievalMode::Controlled => RetrievalRequest::controlled(self.ids(seed)?, self.ids(supplementary)?, hops),
                };
                for (p, &b) in bias {
                    req.bias.insert(self.id(p)?, b);
                }
                req.suppress = self.ids(suppress)?.into_iter().collect();
                let act = g.retrieve(&req)?;
                let retrieved = self.labels(act.retrieved());
                self.emit_fired(self.m.tick, "semantic", "retrieve", retrieved.clone());
                let hops: Vec<Vec<String>> = act.hops.iter().map(|h| self.labels(h.iter().copied())).collect();
                json!({ "retrieved": retrieved, "active": self.labels(act.active()), "hops": hops })
            }
            ProbeOp::Excitation { sources, target } => {
                let (src, t) = (self.ids(sources)?, self.id(target)?);
                let g = &self.m.graph;
                json!({
                    "excitation": g.excitation(&src, t),
                    "weight": g.weight(&src, t),
                    "inhibition": g.inhibition(&src, t),
                })
            }
            ProbeOp::Prototype { observations, repeats } => {
                let obs = observations
                    .iter()
                    .map(|o| Ok((self.ids(&o.features)?, self.id(&o.target)?)))
                    .collect::<Result<Vec<_>, RunError>>()?;
                let proto = self.m.graph.build_prototype(&obs, *repeats)?;
                let mut weights = Map::new();
                for (k, w) in &proto.weights {
                    weights.insert(self.labels(k.iter().copied()).join("+"), json!(w));
                }
                json!({ "target": self.label(proto.target), "weights": weights })
            }
            ProbeOp::Predict { observed, now, supplementary, regular } => {
                let obs = observed.iter().map(|(p, t)| Ok((self.id(p)?, *t))).collect::<Result<Vec<_>, RunError>>()?;
                let (sup, reg) = (self.ids(supplementary)?, self.ids(regular)?);
                let pred = self.m.temporal.generalize_and_predict(&self.m.graph, &obs, *now, &sup, &reg)?;
                let fired = self.labels(pred.fired_ids());
                self.emit_fired(self.m.tick, "temporal", "predict", fired.clone());
                let excitation: Map<String, Value> = pred.fired.iter().map(|&(p, x)| (self.label(p), json!(x))).collect();
                let hops: Vec<Value> = pred.trace.iter().map(|h| self.hop(h)).collect();
                json!({ "fired": fired, "excitation": excitation, "hops": hops })
            }
            ProbeOp::Recall { cue, min_match } => {
                let ids = self.ids(cue)?;
                match self.m.episodic.recall(&ids, *min_match)? {
                    None => json!({ "found": false }),
                    Some(r) => {
                        let mut replay = Vec::new();
                        let mut all = BTreeSet::new();
                        let mut ticks = Vec::new();
                        for ctx in r.replay {
                            let ps = self.m.episodic.reconstruct(&ctx, &self.m.graph)?;
                            let names = self.labels(ps);
                            all.extend(names.iter().cloned());
                            ticks.push(ctx.tick);
                            replay.push(json!({ "tick": ctx.tick, "percepts": names }));
                        }
                        json!({
                            "found": true,
                            "trace": r.trace_id,
                            "offset": r.offset,
                            "matched": r.matched,
                            "ticks": ticks,
                            "replay": replay,
                            "percepts": all,
                        })
                    }
                }
            }
            ProbeOp::Trial { cue, reward, reward_tick, ticks } => {
                let n = self.trace.count("trial") as u32;
                let steps = self.trial(n, cue, reward.as_deref(), *reward_tick, *ticks)?;
                json!({
                    "delta": steps.iter().map(|s| s.delta).collect::<Vec<_>>(),
                    "value": steps.iter().map(|s| s.v_now).collect::<Vec<_>>(),
                    "reward": steps.iter().map(|s| s.reward).collect::<Vec<_>>(),
                })
            }
            ProbeOp::Value { context, rollout } => {
                let key = ContextKey::of_percepts(self.ids(context)?);
                let roll = rollout.iter().map(|c| Ok(ContextKey::of_percepts(self.ids(c)?))).collect::<Result<Vec<_>, RunError>>()?;
                let rs = &self.m.executive.reward;
                json!({ "value": rs.value(&key), "predicted": rs.predict_value(&key, &roll) })
            }
            ProbeOp::Propose { context } => {
                let ctx = PerceptLevelContext::at(PerceptLevel::Conceptual, self.ids(context)?);
                let (cands, chosen) = self.m.executive.decide(&ctx);
                let list: Vec<Value> = cands
                    .iter()
                    .map(|c| json!({ "action": c.action, "external": c.external, "score": c.score, "priority": c.priority }))
                    .collect();
                let chosen = chosen.map(|c| c.action);
                if let Some(a) = &chosen {
                    self.emit_fired(self.m.tick, "executive", "select", vec![a.to_string()]);
                }
                json!({
                    "candidates": list,
                    "actions": cands.iter().map(|c| c.action.to_string()).collect::<Vec<_>>(),
                    "selected": chosen,
                })
            }
            ProbeOp::VpsProbe { stim } => {
                let s = self.stim(stim)?;
                let fired = self.vps()?.probe(&s)?;
                let names = self.unit_names(&fired);
                self.emit_fired(self.m.tick, "vps", "probe", names.clone());
                json!({ "fired": names })
            }
            ProbeOp::VpsExcitation { stim, unit } => {
                let s = self.stim(stim)?;
                let h = self.vps()?;
                let id = h.id(unit)?;
                let pres = h.present(&s)?;
                json!({ "excitation": pres.excitation.get(&id).copied().unwrap_or(0.0), "fired": pres.did_fire(id) })
            }
            ProbeOp::VpsCorrelation { ticks, mix, groups } => self.correlation(*ticks, mix, groups)?,
            ProbeOp::VpsAssemblies {} => {
                let h = self.vps.as_ref().ok_or(RunError::NoVisual)?;
                let list: Vec<Vec<String>> = h.assemblies().iter().map(|a| h.names_of(&a.members)).collect();
                json!({ "assemblies": list })
            }
        })
    }

    /// Probes a random stimulus stream and averages pairwise firing
    /// correlations per group. Each probe takes one tick.
    fn correlation(
        &mut self,
        ticks: u32,
        mix: &[MixEntry],
        groups: &BTreeMap<String, Vec<(String, String)>>,
    ) -> Result<Value, RunError> {
        let stims = mix.iter().map(|m| self.stim(&m.stim)).collect::<Result<Vec<_>, _>>()?;
        let total: f64 = mix.iter().map(|m| m.weight).sum();
        let units: BTreeSet<&str> = groups.values().flatten().flat_map(|(a, b)| [a.as_str(), b.as_str()]).collect();
        let ids = {
            let h = self.vps()?;
            units.iter().map(|u| Ok((*u, h.id(u)?))).collect::<Result<BTreeMap<&str, UnitId>, RunError>>()?
        };
        let mut series: BTreeMap<&str, Vec<bool>> = units.iter().map(|u| (*u, Vec::new())).collect();
        for _ in 0..ticks {
            let mut x = self.rng.gen::<f64>() * total;
            let mut k = mix.len() - 1;
            for (i, m) in mix.iter().enumerate() {
                if x < m.weight {
                    k = i;
                    break;
                }
                x -= m.weight;
            }
            let fired = self.vps()?.probe(&stims[k])?;
            for (u, id) in &ids {
                series.get_mut(u).expect("same keys").push(fired.contains(id));
            }
            let names = self.unit_names(&fired);
            self.emit_fired(self.m.tick, "vps", "correlation", names);
            self.advance(1)?;
        }
        let mut out = Map::new();
        let mut pairs = Map::new();
        for (g, list) in groups {
            let rs: Vec<f64> = list
                .iter()
                .map(|(a, b)| {
                    let r = pearson(&series[a.as_str()], &series[b.as_str()]);
                    pairs.insert(format!("{a}~{b}"), json!(r));
                    r
                })
                .collect();
            out.insert(g.clone(), json!(mean(&rs)));
        }
        let rates: Map<String, Value> =
            series.iter().map(|(u, s)| (u.to_string(), json!(s.iter().filter(|b| **b).count() as f64 / f64::from(ticks)))).collect();
        Ok(json!({ "groups": out, "pairs": pairs, "rates": rates }))
    }

    fn hop(&self, h: &PredictionHop) -> Value {
        match h {
            PredictionHop::Retrieve { from, activated } => {
                json!({ "step": "retrieve", "from": self.label(*from), "activated": self.labels(activated.iter().copied()) })
            }
            PredictionHop::Map { from, to, onset } => {
                json!({ "step": "map", "from": self.label(*from), "to": self.label(*to), "onset": onset })
            }
            PredictionHop::Match { round, fired } => {
                json!({ "step": "match", "round": round, "fired": self.labels(fired.iter().copied()) })
            }
        }
    }

    fn program(&mut self, p: &ProgramPhase) -> Result<(), RunError> {
        let call = p.call.clone().try_map(|r| self.m.graph.resolve(&r))?;
        let value = match self.m.run_program(&call) {
            Ok(out) => {
                self.steps(&out.steps);
                self.output(&out)
            }
            Err(e) => {
                let steps = match &e {
                    OpsError::ProgramFailed { completed, .. } => completed.clone(),
                    _ => Vec::new(),
                };
                self.steps(&steps);
                if !p.allow_failure {
                    return Err(e.into());
                }
                let reason = match &e {
                    OpsError::ProgramFailed { reason, .. } => reason.clone(),
                    other => other.to_string(),
                };
                let list: Vec<Value> = steps.iter().map(|s| self.step_value(s)).collect();
                json!({ "ok": false, "program": call.name(), "error": reason, "steps": list })
            }
        };
        self.emit("ops", "program", json!({ "name": p.name, "program": call.name(), "ok": value["ok"] }));
        self.results.insert(p.name.clone(), value);
        Ok(())
    }

    fn steps(&mut self, steps: &[StepRecord]) {
        for s in steps {
            let v = self.step_value(s);
            self.emit_at(s.tick, "ops", "step", v);
            if let StepResult::Percepts(ps) = &s.result {
                let names = self.labels(ps.iter().copied());
                let source = s.region.map_or_else(|| s.primitive.clone(), |r| r.as_str().to_owned());
                self.emit_fired(s.tick, "ops", &source, names);
            }
        }
    }

    fn step_value(&self, s: &StepRecord) -> Value {
        let result = match &s.result {
            StepResult::Ok => json!("ok"),
            StepResult::Blocked => json!("blocked"),
            StepResult::Protected(b) => json!({ "protected": b }),
            StepResult::Percepts(ps) => json!({ "percepts": self.labels(ps.iter().copied()) }),
            StepResult::Action(a) => json!({ "action": a }),
            StepResult::Value(v) => json!({ "value": v }),
            StepResult::Sequence(seq) => {
                json!({ "sequence": seq.iter().map(|c| self.labels(c.iter().copied())).collect::<Vec<_>>() })
            }
        };
        json!({
            "program": s.program,
            "step": s.step,
            "tick": s.tick,
            "primitive": s.primitive,
            "region": s.region,
            "target": s.target,
            "operands": self.labels(s.operands.iter().copied()),
            "result": result,
        })
    }

    fn output(&self, out: &ProgramOutput) -> Value {
        let steps: Vec<Value> = out.steps.iter().map(|s| self.step_value(s)).collect();
        // Ticks from the last sensory load to the first rule emission.
        let latency = out.steps.iter().find(|s| s.region == Some(Region::Dlpfc) && s.primitive == "propagate").and_then(|emit| {
            out.steps.iter().rev().find(|s| s.primitive == "load" && s.tick <= emit.tick).map(|l| emit.tick - l.tick)
        });
        json!({
            "ok": true,
            "program": out.program,
            "percepts": self.labels(out.percepts.iter().copied()),
            "sequence": out.sequence.iter().map(|c| self.labels(c.iter().copied())).collect::<Vec<_>>(),
            "action": out.action,
            "value": out.value,
            "readout": out.readout,
            "latency": latency,
            "steps": steps,
        })
    }
}
