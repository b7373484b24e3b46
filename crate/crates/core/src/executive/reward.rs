use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::ffa::{ActionId, Ffa};
use crate::semantic::SemanticGraph;
use crate::PerceptId;

/// One element of a value-table key: a plain percept or a time cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextElement {
    Percept(PerceptId),
    Time(PerceptId, u32),
}

impl ContextElement {
    pub fn percept(&self) -> PerceptId {
        match *self {
            ContextElement::Percept(p) | ContextElement::Time(p, _) => p,
        }
    }
}

/// Canonical (sorted, deduplicated) key into the value table.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContextKey(Vec<ContextElement>);

impl ContextKey {
    pub fn new(mut elems: Vec<ContextElement>) -> Self {
        elems.sort();
        elems.dedup();
        ContextKey(elems)
    }

    pub fn of_percepts(ps: impl IntoIterator<Item = PerceptId>) -> Self {
        Self::new(ps.into_iter().map(ContextElement::Percept).collect())
    }

    pub fn elements(&self) -> &[ContextElement] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Distinct percepts mentioned, sorted.
    pub fn percepts(&self) -> Vec<PerceptId> {
        let s: BTreeSet<PerceptId> = self.0.iter().map(ContextElement::percept).collect();
        s.into_iter().collect()
    }

    fn shared(&self, other: &ContextKey) -> usize {
        self.0.iter().filter(|e| other.0.binary_search(e).is_ok()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardParams {
    /// Value and weight learning rate.
    pub alpha: f64,
    /// Striatal gain learning rate.
    pub alpha_s: f64,
    pub gamma: f64,
    pub gain_min: f64,
    /// Ticks a tag stays eligible.
    pub tag_ttl: u32,
    /// Tonic dopamine level reported alongside δ.
    pub baseline: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self { alpha: 0.5, alpha_s: 0.25, gamma: 1.0, gain_min: 0.1, tag_ttl: 10, baseline: 0.0 }
    }
}

/// What an eligibility tag marks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TagKind {
    Context(ContextKey),
    Action { context: ContextKey, action: ActionId },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DopamineReport {
    pub delta: f64,
    /// `(key, before, after)` for every value update.
    pub values: Vec<(ContextKey, f64, f64)>,
    /// Relation edges strengthened toward the post-error context.
    pub edges: usize,
    /// `(action, gain after)` for every action tag touched.
    pub gains: Vec<(ActionId, f64)>,
}

/// Result of one temporal-difference step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TdStep {
    pub reward: f64,
    pub v_prev: f64,
    pub v_now: f64,
    pub delta: f64,
    pub report: DopamineReport,
}

/// `R + γ·V_next − V_now`.
pub fn compute_td_error(r_next: f64, v_next: f64, v_now: f64, gamma: f64) -> f64 {
    r_next + gamma * v_next - v_now
}

/// Value (VMPFC) and received-reward (OFC) networks with eligibility tags.
#[derive(Debug, Clone)]
pub struct RewardSystem {
    values: BTreeMap<ContextKey, f64>,
    received: BTreeMap<PerceptId, f64>,
    tags: Vec<(TagKind, u32)>,
    prev: Option<ContextKey>,
    pub params: RewardParams,
}

impl RewardSystem {
    pub fn new(params: RewardParams) -> Self {
        Self { values: BTreeMap::new(), received: BTreeMap::new(), tags: Vec::new(), prev: None, params }
    }

    pub fn values(&self) -> &BTreeMap<ContextKey, f64> {
        &self.values
    }

    pub fn set_value(&mut self, key: ContextKey, v: f64) {
        self.values.insert(key, v);
    }

    /// Value estimate. Unseen keys borrow from the stored key sharing the
    /// largest fraction of its elements, scaled by that fraction.
    pub fn value(&self, key: &ContextKey) -> f64 {
        if key.is_empty() {
            return 0.0;
        }
        if let Some(v) = self.values.get(key) {
            return *v;
        }
        let mut best: Option<(f64, f64)> = None;
        for (k, v) in &self.values {
            let n = k.shared(key);
            if n == 0 || k.is_empty() {
                continue;
            }
            let frac = n as f64 / k.0.len() as f64;
            if best.is_none_or(|(f, _)| frac > f) {
                best = Some((frac, v * frac));
            }
        }
        best.map_or(0.0, |(_, v)| v)
    }

    pub fn set_received(&mut self, p: PerceptId, r: f64) {
        self.received.insert(p, r);
    }

    /// Immediate reward for a set of active percepts.
    pub fn received(&self, percepts: &[PerceptId]) -> f64 {
        percepts.iter().filter_map(|p| self.received.get(p)).sum()
    }

    pub fn received_table(&self) -> &BTreeMap<PerceptId, f64> {
        &self.received
    }

    /// `V̂(ctx) + Σ γ^(i+1)·(V̂(rᵢ) + R(rᵢ))` over a rollout of predicted contexts.
    pub fn predict_value(&self, ctx: &ContextKey, rollout: &[ContextKey]) -> f64 {
        let g = self.params.gamma;
        let mut total = self.value(ctx);
        let mut disc = 1.0;
        for r in rollout {
            disc *= g;
            total += disc * (self.value(r) + self.received(&r.percepts()));
        }
        total
    }

    pub fn tags(&self) -> &[(TagKind, u32)] {
        &self.tags
    }

    pub fn tag(&mut self, kind: TagKind) {
        self.tags.retain(|(k, _)| *k != kind);
        self.tags.push((kind, self.params.tag_ttl));
    }

    pub fn tag_action(&mut self, context: ContextKey, action: ActionId) {
        self.tag(TagKind::Action { context, action });
    }

    /// Applies δ to every live tag: value correction, edge strengthening
    /// toward `post` (only when δ > 0), action-weight change and gain change.
    pub fn apply_dopamine(
        &mut self,
        delta: f64,
        post: &[PerceptId],
        ffa: &mut Ffa,
        mut graph: Option<&mut SemanticGraph>,
    ) -> DopamineReport {
        let mut rep = DopamineReport { delta, ..Default::default() };
        if delta == 0.0 || !delta.is_finite() {
            return rep;
        }
        let p = self.params;
        let step = p.alpha * delta;
        for (kind, _) in &self.tags {
            match kind {
                TagKind::Context(key) => {
                    let before = self.values.get(key).copied().unwrap_or(0.0);
                    self.values.insert(key.clone(), before + step);
                    rep.values.push((key.clone(), before, before + step));
                    if delta > 0.0 {
                        if let Some(g) = graph.as_deref_mut() {
                            let srcs: Vec<PerceptId> = key.percepts().into_iter().filter(|&s| g.contains(s)).collect();
                            let targets: Vec<PerceptId> = post.iter().copied().filter(|&t| g.contains(t)).collect();
                            for t in targets {
                                rep.edges += g.relation_adjust(&srcs, t, step).len();
                            }
                        }
                    }
                }
                TagKind::Action { context, action } => {
                    let ps = context.percepts();
                    // Unknown actions have no weights to move.
                    let _ = ffa.adjust(&ps, action, step);
                    let g = ffa.adjust_gain(&ps, action, p.alpha_s * delta, p.gain_min);
                    rep.gains.push((action.clone(), g));
                }
            }
        }
        rep
    }

    /// Arriving at `ctx` with reward `r`: computes δ against the previous
    /// context, applies it to live tags, ages tags and tags `ctx`.
    pub fn td_step(&mut self, ctx: ContextKey, r: f64, ffa: &mut Ffa, graph: Option<&mut SemanticGraph>) -> TdStep {
        let v_now = self.value(&ctx);
        let v_prev = self.prev.as_ref().map_or(0.0, |k| self.value(k));
        let delta = compute_td_error(r, v_now, v_prev, self.params.gamma);
        let report = self.apply_dopamine(delta, &ctx.percepts(), ffa, graph);
        for t in &mut self.tags {
            t.1 = t.1.saturating_sub(1);
        }
        self.tags.retain(|t| t.1 > 0);
        if !ctx.is_empty() {
            self.tag(TagKind::Context(ctx.clone()));
        }
        self.prev = Some(ctx);
        TdStep { reward: r, v_prev, v_now, delta, report }
    }

    /// Event boundary: drops tags and the previous context.
    pub fn end_episode(&mut self) {
        self.tags.clear();
        self.prev = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(ps: &[u32]) -> ContextKey {
        ContextKey::of_percepts(ps.iter().map(|&p| PerceptId(p)))
    }

    #[test]
    fn td_formula() {
        assert_eq!(compute_td_error(1.0, 0.0, 0.0, 1.0), 1.0);
        assert_eq!(compute_td_error(0.0, 0.4, 0.4, 1.0), 0.0);
        assert!((compute_td_error(0.0, 0.0, 0.9, 1.0) + 0.9).abs() < 1e-12);
    }

    #[test]
    fn rollout_discount() {
        let mut r = RewardSystem::new(RewardParams { gamma: 0.9, ..Default::default() });
        assert_eq!(r.predict_value(&key(&[1]), &[]), 0.0);
        r.set_value(key(&[2]), 1.0);
        assert!((r.predict_value(&key(&[1]), &[key(&[2])]) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn dopamine_mechanisms() {
        let mut ffa = Ffa::new(0.5);
        ffa.register(super::super::Action::external("go", "legs")).unwrap();
        let mut r = RewardSystem::new(RewardParams::default());
        r.tag(TagKind::Context(key(&[1])));
        let rep = r.apply_dopamine(1.0, &[], &mut ffa, None);
        assert_eq!(r.value(&key(&[1])), 0.5);
        assert_eq!(rep.values.len(), 1);

        ffa.associate(&[PerceptId(1)], &"go".into(), 2).unwrap();
        r.tags.clear();
        r.tag_action(key(&[1]), "go".into());
        let w0 = ffa.score(&[PerceptId(1)], &"go".into());
        r.apply_dopamine(-0.9, &[], &mut ffa, None);
        assert!(ffa.score(&[PerceptId(1)], &"go".into()) < w0);
        assert!(ffa.gain(&[PerceptId(1)], &"go".into()) < 1.0);

        let before = (r.values.clone(), ffa.gain(&[PerceptId(1)], &"go".into()));
        r.apply_dopamine(0.0, &[], &mut ffa, None);
        assert_eq!(before, (r.values.clone(), ffa.gain(&[PerceptId(1)], &"go".into())));
    }

    #[test]
    fn unseen_key_generalizes_by_shared_fraction() {
        let mut r = RewardSystem::new(RewardParams::default());
        r.set_value(key(&[1, 2]), 0.8);
        assert!((r.value(&key(&[1, 3])) - 0.4).abs() < 1e-12);
        assert_eq!(r.value(&key(&[5])), 0.0);
        assert_eq!(r.value(&ContextKey::default()), 0.0);
    }
}
