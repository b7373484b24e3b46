use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ExecutiveError;
use crate::cph::{CphParams, NeuronUnit};
use crate::ops::Region;
use crate::semantic::patterns;
use crate::{PerceptId, UnitId};

/// Levels of perceptual abstraction feeding the action network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerceptLevel {
    AbstractExecutive,
    Executive,
    Conceptual,
    CognitiveMap,
    Sensory,
    Motor,
}

/// Active percepts grouped by level. A percept sits at exactly one level.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PerceptLevelContext {
    levels: BTreeMap<PerceptLevel, BTreeSet<PerceptId>>,
}

impl PerceptLevelContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// All percepts at one level.
    pub fn at(level: PerceptLevel, percepts: impl IntoIterator<Item = PerceptId>) -> Self {
        let mut c = Self::new();
        c.levels.insert(level, percepts.into_iter().collect());
        c
    }

    pub fn insert(&mut self, level: PerceptLevel, p: PerceptId) -> Result<(), ExecutiveError> {
        if self.level_of(p).is_some_and(|l| l != level) {
            return Err(ExecutiveError::LevelConflict(p));
        }
        self.levels.entry(level).or_default().insert(p);
        Ok(())
    }

    pub fn level_of(&self, p: PerceptId) -> Option<PerceptLevel> {
        self.levels.iter().find(|(_, s)| s.contains(&p)).map(|(l, _)| *l)
    }

    pub fn level(&self, level: PerceptLevel) -> impl Iterator<Item = PerceptId> + '_ {
        self.levels.get(&level).into_iter().flatten().copied()
    }

    /// Every percept across levels, sorted.
    pub fn flatten(&self) -> Vec<PerceptId> {
        let all: BTreeSet<PerceptId> = self.levels.values().flatten().copied().collect();
        all.into_iter().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.values().all(BTreeSet::is_empty)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub String);

impl From<&str> for ActionId {
    fn from(s: &str) -> Self {
        ActionId(s.to_owned())
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InternalOp {
    Ungate,
    Protect,
    Propagate,
    Imagery,
    Attention,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Internal { op: InternalOp, region: Option<Region> },
    External(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub id: ActionId,
    pub kind: ActionKind,
    /// Operation arguments, e.g. the percepts an imagery action inserts.
    pub payload: Vec<PerceptId>,
}

impl Action {
    pub fn external(id: &str, motor: &str) -> Self {
        Action { id: id.into(), kind: ActionKind::External(motor.to_owned()), payload: Vec::new() }
    }

    pub fn internal(id: &str, op: InternalOp, region: Option<Region>, payload: Vec<PerceptId>) -> Self {
        Action { id: id.into(), kind: ActionKind::Internal { op, region }, payload }
    }

    pub fn is_external(&self) -> bool {
        matches!(self.kind, ActionKind::External(_))
    }
}

/// A proposed action with its match score and gated priority.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub action: ActionId,
    pub external: bool,
    pub score: f64,
    pub priority: f64,
}

/// Feedforward action network: one complementary-input store per action over
/// context percepts, plus striatal gains per (context, action).
#[derive(Debug, Clone)]
pub struct Ffa {
    actions: BTreeMap<ActionId, (Action, NeuronUnit)>,
    gains: BTreeMap<(Vec<PerceptId>, ActionId), f64>,
    pub theta_a: f64,
    pub cph: CphParams,
}

impl Ffa {
    pub fn new(theta_a: f64) -> Self {
        Self { actions: BTreeMap::new(), gains: BTreeMap::new(), theta_a, cph: CphParams::default() }
    }

    pub fn register(&mut self, action: Action) -> Result<(), ExecutiveError> {
        if self.actions.contains_key(&action.id) {
            return Err(ExecutiveError::DuplicateAction(action.id.0));
        }
        if let ActionKind::Internal { op: InternalOp::Ungate | InternalOp::Protect | InternalOp::Propagate, region: None } =
            action.kind
        {
            return Err(ExecutiveError::UnknownAction(format!("{} needs a region", action.id)));
        }
        let unit = NeuronUnit::new(UnitId(self.actions.len() as u32), self.theta_a, self.cph);
        self.actions.insert(action.id.clone(), (action, unit));
        Ok(())
    }

    pub fn action(&self, id: &ActionId) -> Option<&Action> {
        self.actions.get(id).map(|(a, _)| a)
    }

    pub fn actions(&self) -> impl Iterator<Item = &Action> {
        self.actions.values().map(|(a, _)| a)
    }

    pub fn store(&self, id: &ActionId) -> Option<&NeuronUnit> {
        self.actions.get(id).map(|(_, n)| n)
    }

    fn unit_mut(&mut self, id: &ActionId) -> Result<&mut NeuronUnit, ExecutiveError> {
        self.actions.get_mut(id).map(|(_, n)| n).ok_or_else(|| ExecutiveError::UnknownAction(id.0.clone()))
    }

    /// Co-activation of a context with an action: potentiates every subset of
    /// the context in the action's store, `repeats` times.
    pub fn associate(&mut self, ctx: &[PerceptId], action: &ActionId, repeats: u32) -> Result<(), ExecutiveError> {
        let w = patterns(ctx.iter().copied());
        let unit = self.unit_mut(action)?;
        for _ in 0..repeats {
            let eta = unit.params.eta_plus;
            unit.potentiate(&w, eta);
        }
        Ok(())
    }

    /// Signed weight change for a context→action pair.
    pub fn adjust(&mut self, ctx: &[PerceptId], action: &ActionId, amount: f64) -> Result<(), ExecutiveError> {
        let w = patterns(ctx.iter().copied());
        self.unit_mut(action)?.adjust(&w, amount);
        Ok(())
    }

    pub fn gain(&self, ctx: &[PerceptId], action: &ActionId) -> f64 {
        self.gains.get(&(canonical(ctx), action.clone())).copied().unwrap_or(1.0)
    }

    /// Adds `delta` to a striatal gain, flooring at `min`. Returns the new gain.
    pub fn adjust_gain(&mut self, ctx: &[PerceptId], action: &ActionId, delta: f64, min: f64) -> f64 {
        let g = self.gains.entry((canonical(ctx), action.clone())).or_insert(1.0);
        *g = (*g + delta).max(min);
        *g
    }

    pub fn score(&self, ctx: &[PerceptId], action: &ActionId) -> f64 {
        self.store(action).map_or(0.0, |n| n.excitation(&patterns(ctx.iter().copied())))
    }

    /// Every action whose store is excited to at least `theta_a`, in id order.
    pub fn ffa_propose(&self, ctx: &PerceptLevelContext) -> Vec<Candidate> {
        let flat = ctx.flatten();
        if flat.is_empty() {
            return Vec::new();
        }
        let window = patterns(flat.iter().copied());
        self.actions
            .iter()
            .filter_map(|(id, (a, n))| {
                let score = n.excitation(&window);
                (score > 0.0 && score >= self.theta_a).then(|| Candidate {
                    action: id.clone(),
                    external: a.is_external(),
                    score,
                    priority: score * self.gain(&flat, id),
                })
            })
            .collect()
    }
}

fn canonical(ctx: &[PerceptId]) -> Vec<PerceptId> {
    let mut v = ctx.to_vec();
    v.sort();
    v.dedup();
    v
}

/// Winner-take-all on priority. Ties go to the smaller action id. With
/// `suppress_external` set, external candidates are dropped first.
pub fn select_action(cands: &[Candidate], suppress_external: bool) -> Option<Candidate> {
    cands
        .iter()
        .filter(|c| !(suppress_external && c.external))
        .fold(None::<&Candidate>, |best, c| match best {
            Some(b) if b.priority > c.priority || (b.priority == c.priority && b.action <= c.action) => Some(b),
            _ => Some(c),
        })
        .cloned()
}
