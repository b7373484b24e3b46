use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{Modality, SemanticError};
use crate::cph::{inhibitory_update, CphParams, FiringPattern, NeuronUnit, Pattern, PatternKey};
use crate::{PerceptId, UnitId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Percept {
    pub id: PerceptId,
    pub label: String,
    pub modality: Modality,
    pub assembly: Vec<UnitId>,
}

impl Percept {
    /// `label(modality)`.
    pub fn qualified(&self) -> String {
        format!("{}({})", self.label, self.modality)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SemanticParams {
    /// Propagation threshold.
    pub theta_p: f64,
    pub hop_cap: u32,
    pub assembly_size: usize,
    /// Multiplier on potentiation when source and target modalities differ.
    pub cross_modal_gain: f64,
    pub eta_inh: f64,
    pub cph: CphParams,
}

impl Default for SemanticParams {
    fn default() -> Self {
        Self {
            theta_p: 4.0,
            hop_cap: 6,
            assembly_size: 4,
            cross_modal_gain: 1.0,
            eta_inh: 0.5,
            cph: CphParams::default(),
        }
    }
}

/// Inhibition onto `target` whenever the gate store crosses its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct InhibitoryUnit {
    pub gate: NeuronUnit,
    pub target: PerceptId,
    pub weight: f64,
}

impl InhibitoryUnit {
    pub fn gate_fires(&self, active: &[FiringPattern]) -> bool {
        self.gate.step(active).fired
    }
}

/// One weight change made by replay, reported at assembly level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationDelta {
    pub target: PerceptId,
    pub key: Vec<PerceptId>,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone)]
pub struct SemanticGraph {
    percepts: Vec<Percept>,
    by_key: BTreeMap<(String, Modality), PerceptId>,
    next_unit: u32,
    relations: BTreeMap<PerceptId, NeuronUnit>,
    unit_relations: BTreeMap<PerceptId, NeuronUnit>,
    inhibitors: Vec<InhibitoryUnit>,
    pub params: SemanticParams,
}

pub(crate) fn pattern(p: PerceptId) -> FiringPattern {
    FiringPattern::saturated(UnitId(p.0))
}

pub(crate) fn patterns(ps: impl IntoIterator<Item = PerceptId>) -> Vec<FiringPattern> {
    ps.into_iter().map(pattern).collect()
}

fn key_percepts(k: &PatternKey<FiringPattern>) -> Vec<PerceptId> {
    k.patterns().iter().map(|p| PerceptId(p.unit().0)).collect()
}

impl SemanticGraph {
    pub fn new(params: SemanticParams) -> Self {
        Self {
            percepts: Vec::new(),
            by_key: BTreeMap::new(),
            next_unit: 0,
            relations: BTreeMap::new(),
            unit_relations: BTreeMap::new(),
            inhibitors: Vec::new(),
            params,
        }
    }

    pub fn register_percept(&mut self, label: &str, modality: Modality, assembly_size: usize) -> Result<PerceptId, SemanticError> {
        if assembly_size == 0 {
            return Err(SemanticError::EmptyAssembly);
        }
        let key = (label.to_owned(), modality);
        if self.by_key.contains_key(&key) {
            return Err(SemanticError::DuplicatePercept(format!("{label}({modality})")));
        }
        let id = PerceptId(self.percepts.len() as u32);
        let assembly = (0..assembly_size as u32).map(|i| UnitId(self.next_unit + i)).collect();
        self.next_unit += assembly_size as u32;
        self.percepts.push(Percept { id, label: label.to_owned(), modality, assembly });
        self.by_key.insert(key, id);
        Ok(id)
    }

    /// Registers a percept over an explicit assembly, which may share units
    /// with other percepts.
    pub fn register_with_assembly(&mut self, label: &str, modality: Modality, assembly: Vec<UnitId>) -> Result<PerceptId, SemanticError> {
        if assembly.is_empty() {
            return Err(SemanticError::EmptyAssembly);
        }
        let key = (label.to_owned(), modality);
        if self.by_key.contains_key(&key) {
            return Err(SemanticError::DuplicatePercept(format!("{label}({modality})")));
        }
        let id = PerceptId(self.percepts.len() as u32);
        self.next_unit = self.next_unit.max(assembly.iter().map(|u| u.0 + 1).max().unwrap_or(0));
        self.percepts.push(Percept { id, label: label.to_owned(), modality, assembly });
        self.by_key.insert(key, id);
        Ok(id)
    }

    /// Returns the existing percept or registers it with the default assembly size.
    pub fn ensure(&mut self, label: &str, modality: Modality) -> PerceptId {
        match self.lookup(label, modality) {
            Some(id) => id,
            None => self
                .register_percept(label, modality, self.params.assembly_size.max(1))
                .expect("label checked unused"),
        }
    }

    pub fn lookup(&self, label: &str, modality: Modality) -> Option<PerceptId> {
        self.by_key.get(&(label.to_owned(), modality)).copied()
    }

    /// Resolves `label(modality)` or a bare label that is unique across modalities.
    pub fn resolve(&self, name: &str) -> Result<PerceptId, SemanticError> {
        let name = name.trim();
        if let Some(open) = name.rfind('(') {
            if name.ends_with(')') {
                let m: Modality = name[open + 1..name.len() - 1].parse()?;
                let label = name[..open].trim();
                return self.lookup(label, m).ok_or_else(|| SemanticError::UnknownPercept(name.to_owned()));
            }
        }
        let mut hits = self.by_key.range((name.to_owned(), Modality::Visual)..).take_while(|((l, _), _)| l == name);
        match (hits.next(), hits.next()) {
            (Some((_, &id)), None) => Ok(id),
            (Some(_), Some(_)) => Err(SemanticError::AmbiguousPercept(name.to_owned())),
            _ => Err(SemanticError::UnknownPercept(name.to_owned())),
        }
    }

    pub fn percept(&self, id: PerceptId) -> &Percept {
        &self.percepts[id.0 as usize]
    }

    pub fn contains(&self, id: PerceptId) -> bool {
        (id.0 as usize) < self.percepts.len()
    }

    pub fn percepts(&self) -> &[Percept] {
        &self.percepts
    }

    pub fn label(&self, id: PerceptId) -> &str {
        &self.percept(id).label
    }

    pub fn labels(&self, ids: &[PerceptId]) -> Vec<String> {
        ids.iter().map(|&p| self.label(p).to_owned()).collect()
    }

    pub(crate) fn check(&self, ids: &[PerceptId]) -> Result<(), SemanticError> {
        match ids.iter().find(|p| !self.contains(**p)) {
            Some(p) => Err(SemanticError::UnknownPercept(p.to_string())),
            None => Ok(()),
        }
    }

    fn store_mut(&mut self, target: PerceptId) -> &mut NeuronUnit {
        let params = self.params;
        self.relations
            .entry(target)
            .or_insert_with(|| NeuronUnit::new(UnitId(target.0), params.theta_p, params.cph))
    }

    fn unit_store_mut(&mut self, target: PerceptId) -> &mut NeuronUnit {
        let params = self.params;
        self.unit_relations
            .entry(target)
            .or_insert_with(|| NeuronUnit::new(UnitId(target.0), params.theta_p, params.cph))
    }

    /// Incoming relation store of a percept, if any relation was ever learned.
    pub fn relation_store(&self, target: PerceptId) -> Option<&NeuronUnit> {
        self.relations.get(&target)
    }

    pub fn unit_relation_store(&self, target: PerceptId) -> Option<&NeuronUnit> {
        self.unit_relations.get(&target)
    }

    /// Assembly-level weight of the complementary input `sources` onto `target`.
    pub fn weight(&self, sources: &[PerceptId], target: PerceptId) -> f64 {
        self.relations
            .get(&target)
            .map_or(0.0, |s| s.weight(&PatternKey::new(patterns(sources.iter().copied()))))
    }

    /// Assembly-level excitation reaching `target` from an active set.
    pub fn excitation(&self, active: &[PerceptId], target: PerceptId) -> f64 {
        self.relations.get(&target).map_or(0.0, |s| s.excitation(&patterns(active.iter().copied())))
    }

    fn gain(&self, sources: &[PerceptId], target: PerceptId) -> f64 {
        let m = self.percept(target).modality;
        if sources.iter().any(|&s| self.percept(s).modality != m) {
            self.params.cross_modal_gain
        } else {
            1.0
        }
    }

    fn unit_window(&self, sources: &[PerceptId]) -> Vec<FiringPattern> {
        sources
            .iter()
            .flat_map(|&s| self.percept(s).assembly.iter().map(|&u| FiringPattern::saturated(u)))
            .collect()
    }

    /// One plasticity step of `target` against the window `sources`, at both
    /// assembly and unit granularity. `amount` > 0 potentiates, < 0 depresses.
    pub fn relation_adjust(&mut self, sources: &[PerceptId], target: PerceptId, amount: f64) -> Vec<RelationDelta> {
        let srcs: Vec<PerceptId> = sources.iter().copied().filter(|&s| s != target).collect();
        if srcs.is_empty() || amount == 0.0 {
            return Vec::new();
        }
        let amount = if amount > 0.0 { amount * self.gain(&srcs, target) } else { amount };
        let uw = self.unit_window(&srcs);
        self.unit_store_mut(target).adjust(&uw, amount);
        self.store_mut(target)
            .adjust(&patterns(srcs), amount)
            .into_iter()
            .map(|d| RelationDelta { target, key: key_percepts(&d.key), before: d.before, after: d.after })
            .collect()
    }

    /// Complementary plasticity for `target` given that `sources` were active.
    pub fn relation_update(&mut self, sources: &[PerceptId], target: PerceptId, fired: bool) -> Vec<RelationDelta> {
        let c = self.params.cph;
        self.relation_adjust(sources, target, if fired { c.eta_plus } else { -c.eta_minus })
    }

    /// Replays a trace of percept contexts, treating each context as the
    /// presynaptic window for every percept in the next one.
    pub fn consolidate_replay(
        &mut self,
        trace: &[Vec<PerceptId>],
        direction: super::retrieval::ReplayDirection,
        repeats: u32,
    ) -> Result<Vec<RelationDelta>, SemanticError> {
        use super::retrieval::ReplayDirection::*;
        if trace.len() < 2 {
            return Err(SemanticError::TraceTooShort);
        }
        for ctx in trace {
            if ctx.is_empty() {
                return Err(SemanticError::EmptyContext);
            }
            self.check(ctx)?;
        }
        let mut out = Vec::new();
        let mut sweep = |g: &mut Self, backward: bool| {
            let n = trace.len();
            for i in 0..n - 1 {
                let (src, dst) = if backward { (&trace[n - 1 - i], &trace[n - 2 - i]) } else { (&trace[i], &trace[i + 1]) };
                for &t in dst {
                    out.extend(g.relation_update(src, t, true));
                }
            }
        };
        for _ in 0..repeats {
            match direction {
                Forward => sweep(self, false),
                Backward => sweep(self, true),
                Both => {
                    sweep(self, false);
                    sweep(self, true);
                }
            }
        }
        Ok(out)
    }

    /// Unit-granularity excitation of `target`, with some source units silenced.
    pub fn assembly_excitation(
        &self,
        sources: &[(PerceptId, BTreeSet<UnitId>)],
        target: PerceptId,
    ) -> Result<f64, SemanticError> {
        if !self.contains(target) {
            return Err(SemanticError::UnknownPercept(target.to_string()));
        }
        let active: Vec<FiringPattern> = sources
            .iter()
            .flat_map(|(p, drop)| {
                self.percept(*p).assembly.iter().filter(move |u| !drop.contains(u)).map(|&u| FiringPattern::saturated(u))
            })
            .collect();
        Ok(self.unit_relations.get(&target).map_or(0.0, |s| s.excitation(&active)))
    }

    /// Installs an inhibitory unit whose gate fires once all of `gate_inputs`
    /// are active. Returns its index.
    pub fn add_inhibitor(&mut self, gate_inputs: &[PerceptId], target: PerceptId, weight: f64) -> Result<usize, SemanticError> {
        self.check(gate_inputs)?;
        self.check(&[target])?;
        let mut gate = NeuronUnit::new(UnitId(u32::MAX), 1.0, self.params.cph);
        let d = gate.potentiate(&patterns(gate_inputs.iter().copied()), 1.0);
        gate.threshold = d.len() as f64;
        self.inhibitors.push(InhibitoryUnit { gate, target, weight });
        Ok(self.inhibitors.len() - 1)
    }

    pub fn inhibitors(&self) -> &[InhibitoryUnit] {
        &self.inhibitors
    }

    /// Anti-Hebbian update of inhibitor `idx` for a trial with `active`
    /// percepts in which the target did or did not fire.
    pub fn train_inhibitor(&mut self, idx: usize, active: &[PerceptId], target_fired: bool) -> f64 {
        let (eta, cap) = (self.params.eta_inh, self.params.cph.w_max);
        let act = patterns(active.iter().copied());
        let inh = &mut self.inhibitors[idx];
        let pre = inh.gate_fires(&act);
        inh.weight = inhibitory_update(inh.weight, pre, target_fired, eta, cap);
        inh.weight
    }

    /// Total inhibition reaching `target` from gates open under `active`.
    pub fn inhibition(&self, active: &[PerceptId], target: PerceptId) -> f64 {
        let act = patterns(active.iter().copied());
        self.inhibitors
            .iter()
            .filter(|i| i.target == target && i.gate_fires(&act))
            .map(|i| i.weight)
            .sum()
    }

    /// Rescales one target's store towards a total weight.
    pub fn rescale(&mut self, target: PerceptId, total: f64) -> f64 {
        let s = self.store_mut(target);
        s.homeostatic_target = total;
        let f = s.homeostatic_rescale();
        let u = self.unit_store_mut(target);
        u.homeostatic_target = u.total_weight() * f;
        u.homeostatic_rescale();
        f
    }

    /// `label(modality) -> label(modality) : subset-key : weight` lines,
    /// sorted. Multi-percept inputs join their labels with `+`.
    pub fn dump(&self) -> String {
        let mut lines = Vec::new();
        for (&t, store) in &self.relations {
            for (k, w) in store.inputs() {
                let ids = key_percepts(k);
                let left: Vec<String> = ids.iter().map(|&p| self.percept(p).qualified()).collect();
                let key: Vec<String> = ids.iter().map(|p| p.0.to_string()).collect();
                lines.push(format!("{} -> {} : {} : {}", left.join("+"), self.percept(t).qualified(), key.join(","), w));
            }
        }
        lines.sort();
        let mut s = String::new();
        for l in lines {
            let _ = writeln!(s, "{l}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantic::retrieval::ReplayDirection;

    #[test]
    fn registration() {
        let mut g = SemanticGraph::new(SemanticParams::default());
        let p = g.register_percept("penguin", Modality::Visual, 4).unwrap();
        assert_eq!(g.percept(p).assembly.len(), 4);
        assert!(g.register_percept("penguin", Modality::Visual, 4).is_err());
        let j = g.register_percept("justice", Modality::Amodal, 6).unwrap();
        assert_eq!(g.percept(j).modality, Modality::Amodal);
        assert_eq!(g.resolve("penguin").unwrap(), p);
        assert_eq!(g.resolve("penguin(vis)").unwrap(), p);
        g.register_percept("penguin", Modality::Lexical, 4).unwrap();
        assert!(matches!(g.resolve("penguin"), Err(SemanticError::AmbiguousPercept(_))));
    }

    #[test]
    fn bidirectional_replay() {
        let mut g = SemanticGraph::new(SemanticParams::default());
        let v = g.ensure("car", Modality::Visual);
        let l = g.ensure("car", Modality::Lexical);
        g.consolidate_replay(&[vec![v], vec![l]], ReplayDirection::Both, 5).unwrap();
        assert_eq!(g.weight(&[v], l), 5.0);
        assert_eq!(g.weight(&[l], v), 5.0);
        let mut f = SemanticGraph::new(SemanticParams::default());
        let v = f.ensure("car", Modality::Visual);
        let l = f.ensure("car", Modality::Lexical);
        f.consolidate_replay(&[vec![v], vec![l]], ReplayDirection::Forward, 5).unwrap();
        assert_eq!(f.weight(&[l], v), 0.0);
        assert!(f.consolidate_replay(&[vec![v]], ReplayDirection::Forward, 1).is_err());
    }

    #[test]
    fn conjunctive_input_created() {
        let mut g = SemanticGraph::new(SemanticParams::default());
        let ch = g.ensure("chocolate", Modality::Visual);
        let co = g.ensure("cone", Modality::Visual);
        let ic = g.ensure("ice cream", Modality::Lexical);
        g.consolidate_replay(&[vec![ch, co], vec![ic]], ReplayDirection::Forward, 1).unwrap();
        assert_eq!(g.weight(&[ch, co], ic), 1.0);
        assert_eq!(g.weight(&[ch], ic), 1.0);
        assert_eq!(g.weight(&[co], ic), 1.0);
        assert_eq!(
            g.dump(),
            "chocolate(visual) -> ice cream(lexical) : 0 : 1\n\
             chocolate(visual)+cone(visual) -> ice cream(lexical) : 0,1 : 1\n\
             cone(visual) -> ice cream(lexical) : 1 : 1\n"
        );
    }

    #[test]
    fn unit_dropout_arithmetic() {
        let mut g = SemanticGraph::new(SemanticParams::default());
        let p = g.ensure("penguin", Modality::Visual);
        let c = g.ensure("cannot fly", Modality::Lexical);
        g.consolidate_replay(&[vec![p], vec![c]], ReplayDirection::Forward, 1).unwrap();
        let units = g.percept(p).assembly.clone();
        assert_eq!(g.assembly_excitation(&[(p, BTreeSet::new())], c).unwrap(), 15.0);
        assert_eq!(g.assembly_excitation(&[(p, BTreeSet::from([units[3]]))], c).unwrap(), 7.0);
        let all: BTreeSet<_> = units.into_iter().collect();
        assert_eq!(g.assembly_excitation(&[(p, all)], c).unwrap(), 0.0);
    }
}
