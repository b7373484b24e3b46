//! Executive control: the feedforward action network, winner-take-all
//! selection, the cue→command relation store with its fast buffer, and the
//! reward networks with temporal-difference dopamine updates.

mod ffa;
mod reward;
mod rules;

pub use ffa::{select_action, Action, ActionId, ActionKind, Candidate, Ffa, InternalOp, PerceptLevel, PerceptLevelContext};
pub use reward::{ContextElement, ContextKey, DopamineReport, RewardParams, RewardSystem, TagKind, TdStep, compute_td_error};
pub use rules::{FastBuffer, RelationStore, Rule};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

use crate::semantic::SemanticGraph;
use crate::temporal::{OnsetClock, TemporalPercept};
use crate::PerceptId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecutiveError {
    #[error("percept {0} is already tagged at another level")]
    LevelConflict(PerceptId),
    #[error("rule cue is empty")]
    EmptyCue,
    #[error("relation store is protected")]
    Protected,
    #[error("fast buffer must present a cue and then a command before internalizing")]
    GatingOrder,
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("duplicate action `{0}`")]
    DuplicateAction(String),
    #[error("discount factor {0} outside [0, 1]")]
    BadGamma(f64),
    #[error("non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExecutiveParams {
    /// Minimum match score for an action to be proposed.
    pub theta_a: f64,
    pub reward: RewardParams,
}

impl Default for ExecutiveParams {
    fn default() -> Self {
        Self { theta_a: 1.0, reward: RewardParams::default() }
    }
}

/// One scripted cue/reward trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditioningTrial {
    pub cue: PerceptId,
    /// Reward percept and the tick (relative to cue onset) it arrives; `None` omits it.
    pub reward: Option<(PerceptId, u64)>,
    /// Number of ticks in the trial.
    pub ticks: u64,
}

#[derive(Debug, Clone)]
pub struct Executive {
    pub ffa: Ffa,
    /// Cue→command rules (DLPFC).
    pub relations: RelationStore,
    /// Time-cued rules held for later (rPFC).
    pub prospective: RelationStore,
    pub buffer: FastBuffer,
    pub reward: RewardSystem,
    /// Percepts that, when active, veto every external action.
    pub suppressors: BTreeSet<PerceptId>,
    pub params: ExecutiveParams,
}

impl Executive {
    pub fn new(params: ExecutiveParams) -> Self {
        Self {
            ffa: Ffa::new(params.theta_a),
            relations: RelationStore::default(),
            prospective: RelationStore::default(),
            buffer: FastBuffer::default(),
            reward: RewardSystem::new(params.reward),
            suppressors: BTreeSet::new(),
            params,
        }
    }

    /// Proposal then selection, honouring global suppression.
    pub fn decide(&self, ctx: &PerceptLevelContext) -> (Vec<Candidate>, Option<Candidate>) {
        let cands = self.ffa.ffa_propose(ctx);
        let flat = ctx.flatten();
        let suppress = self.suppressors.iter().any(|s| flat.contains(s));
        let chosen = select_action(&cands, suppress);
        (cands, chosen)
    }

    /// One TD step: δ for arriving at `ctx` with `reward`, dopamine applied to
    /// live tags, then `ctx` tagged.
    pub fn td_step(&mut self, ctx: ContextKey, reward: f64, graph: Option<&mut SemanticGraph>) -> TdStep {
        self.reward.td_step(ctx, reward, &mut self.ffa, graph)
    }

    /// Runs one conditioning trial. Contexts are the cue's time cells plus the
    /// reward percept on its arrival tick; reward magnitude comes from the
    /// received-reward table.
    pub fn run_conditioning_trial(
        &mut self,
        trial: &ConditioningTrial,
        mut graph: Option<&mut SemanticGraph>,
    ) -> Vec<TdStep> {
        let mut clock = OnsetClock::new(2);
        let mut out = Vec::with_capacity(trial.ticks as usize);
        self.reward.end_episode();
        for k in 0..trial.ticks {
            let fresh: &[PerceptId] = if k == 0 { std::slice::from_ref(&trial.cue) } else { &[] };
            let active = clock.tick_ingest(k, fresh).expect("ticks increase");
            let mut elems: Vec<ContextElement> = active
                .into_iter()
                .filter_map(|t| match t {
                    TemporalPercept::TimeCell { percept, elapsed } => Some(ContextElement::Time(percept, elapsed)),
                    TemporalPercept::SequenceCell(_) => None,
                })
                .collect();
            let mut r = 0.0;
            if let Some((p, at)) = trial.reward {
                if at == k {
                    elems.push(ContextElement::Percept(p));
                    r = self.reward.received(&[p]);
                }
            }
            out.push(self.td_step(ContextKey::new(elems), r, graph.as_deref_mut()));
        }
        self.reward.end_episode();
        out
    }

    /// Exploration: pairs random contexts with random external actions so the
    /// action network has co-occurrences before reward shaping. Returns the
    /// `(context index, action)` pairs made.
    pub fn motor_babble<R: Rng>(
        &mut self,
        rng: &mut R,
        contexts: &[Vec<PerceptId>],
        steps: usize,
    ) -> Vec<(usize, ActionId)> {
        let external: Vec<ActionId> = self.ffa.actions().filter(|a| a.is_external()).map(|a| a.id.clone()).collect();
        let mut out = Vec::new();
        if contexts.is_empty() || external.is_empty() {
            return out;
        }
        for _ in 0..steps {
            let i = rng.gen_range(0..contexts.len());
            let a = external.choose(rng).expect("nonempty").clone();
            self.ffa.associate(&contexts[i], &a, 1).expect("action exists");
            out.push((i, a));
        }
        out
    }
}
