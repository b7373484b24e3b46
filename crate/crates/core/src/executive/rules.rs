use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

use super::ExecutiveError;
use crate::PerceptId;

/// Cue→command rule. Fires when every cue percept is active.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rule {
    pub cue: BTreeSet<PerceptId>,
    pub command: PerceptId,
    /// Last tick the rule is live; `None` never expires.
    pub expiry: Option<u64>,
}

impl Rule {
    pub fn live(&self, now: u64) -> bool {
        self.expiry.is_none_or(|e| now <= e)
    }
}

/// Short-term rule memory, plus stored (item, value) pairs used by decision
/// making.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RelationStore {
    rules: Vec<Rule>,
    values: BTreeMap<PerceptId, f64>,
    pub protected: bool,
}

impl RelationStore {
    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn store_rule(&mut self, cue: BTreeSet<PerceptId>, command: PerceptId, expiry: Option<u64>) -> Result<(), ExecutiveError> {
        if self.protected {
            return Err(ExecutiveError::Protected);
        }
        if cue.is_empty() {
            return Err(ExecutiveError::EmptyCue);
        }
        let rule = Rule { cue, command, expiry };
        if !self.rules.contains(&rule) {
            self.rules.push(rule);
        }
        Ok(())
    }

    /// Commands of every live rule whose cue is contained in `ctx`, sorted.
    pub fn match_rules(&self, ctx: &BTreeSet<PerceptId>, now: u64) -> Vec<PerceptId> {
        let out: BTreeSet<PerceptId> = self
            .rules
            .iter()
            .filter(|r| r.live(now) && r.cue.is_subset(ctx))
            .map(|r| r.command)
            .collect();
        out.into_iter().collect()
    }

    pub fn store_value(&mut self, item: PerceptId, value: f64) -> Result<(), ExecutiveError> {
        if self.protected {
            return Err(ExecutiveError::Protected);
        }
        if !value.is_finite() {
            return Err(ExecutiveError::NonFinite);
        }
        self.values.insert(item, value);
        Ok(())
    }

    pub fn values(&self) -> &BTreeMap<PerceptId, f64> {
        &self.values
    }

    pub fn clear(&mut self) -> Result<(), ExecutiveError> {
        if self.protected {
            return Err(ExecutiveError::Protected);
        }
        self.rules.clear();
        self.values.clear();
        Ok(())
    }
}

/// Gating controller that loads one rule: cue first, then command.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FastBuffer {
    cue: Option<BTreeSet<PerceptId>>,
    command: Option<PerceptId>,
}

impl FastBuffer {
    pub fn present_cue(&mut self, cue: BTreeSet<PerceptId>) {
        self.cue = Some(cue);
        self.command = None;
    }

    pub fn present_command(&mut self, command: PerceptId) -> Result<(), ExecutiveError> {
        if self.cue.is_none() {
            return Err(ExecutiveError::GatingOrder);
        }
        self.command = Some(command);
        Ok(())
    }

    pub fn staged(&self) -> (Option<&BTreeSet<PerceptId>>, Option<PerceptId>) {
        (self.cue.as_ref(), self.command)
    }

    /// Writes the staged rule into `store` and clears the buffer.
    pub fn internalize(&mut self, store: &mut RelationStore, expiry: Option<u64>) -> Result<Rule, ExecutiveError> {
        let (Some(cue), Some(command)) = (self.cue.clone(), self.command) else {
            return Err(ExecutiveError::GatingOrder);
        };
        store.store_rule(cue.clone(), command, expiry)?;
        self.cue = None;
        self.command = None;
        Ok(Rule { cue, command, expiry })
    }
}
