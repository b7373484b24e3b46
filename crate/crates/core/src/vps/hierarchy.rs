use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::{maximal_cliques, CellAssembly, FeatureStimulus, Rect, ShapeTemplate, VpsError};
use crate::cph::{inhibitory_update, CphParams, FiringPattern, NeuronUnit};
use crate::UnitId;

pub const LAYER_NAMES: [&str; 4] = ["V1", "V2", "V4", "IT"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VpsParams {
    /// Lateral increment for a → b when b fires one tick after a.
    pub eta_lat: f64,
    /// Fraction of `eta_lat` added to the reverse link b → a.
    pub symmetric_factor: f64,
    /// Lateral weight at which a link recruits its target.
    pub theta_bidir: f64,
    pub eta_inh: f64,
    pub w_max: f64,
    /// Rescale every unit with a homeostatic target each this many learning
    /// ticks; 0 disables.
    pub homeostasis_interval: u32,
    pub cph: CphParams,
}

impl Default for VpsParams {
    fn default() -> Self {
        Self {
            eta_lat: 1.0,
            symmetric_factor: 0.5,
            theta_bidir: 5.0,
            eta_inh: 0.5,
            w_max: 100.0,
            homeostasis_interval: 0,
            cph: CphParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisualUnit {
    pub name: String,
    pub layer: usize,
    pub receptive_field: Rect,
    pub tuned_feature: Option<String>,
    pub neuron: NeuronUnit,
    /// Outgoing excitatory lateral weights, keyed by target.
    pub excitatory_lateral: BTreeMap<UnitId, f64>,
    /// Outgoing inhibitory weights, keyed by target.
    pub inhibitory_lateral: BTreeMap<UnitId, f64>,
}

/// Fired units of one layer, split by how they were driven.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LayerActivity {
    pub feedforward: BTreeSet<UnitId>,
    pub lateral: BTreeSet<UnitId>,
}

impl LayerActivity {
    pub fn fired(&self) -> BTreeSet<UnitId> {
        self.feedforward.union(&self.lateral).copied().collect()
    }
}

/// Everything computed for one stimulus presentation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Presentation {
    pub layers: Vec<LayerActivity>,
    pub excitation: BTreeMap<UnitId, f64>,
    pub windows: BTreeMap<UnitId, Vec<FiringPattern>>,
}

impl Presentation {
    pub fn fired(&self) -> BTreeSet<UnitId> {
        self.layers.iter().flat_map(|l| l.fired()).collect()
    }

    pub fn did_fire(&self, u: UnitId) -> bool {
        self.layers.iter().any(|l| l.feedforward.contains(&u) || l.lateral.contains(&u))
    }
}

/// A shape swept along a trajectory, repeated for some passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MovingObjectProtocol {
    pub shape: ShapeTemplate,
    pub trajectory: Vec<(i64, i64)>,
    pub passes: u32,
    /// Blank ticks after each pass, separating passes for lateral learning.
    #[serde(default = "one")]
    pub gap_ticks: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolReport {
    /// Fired units per tick, gap ticks included.
    pub ticks: Vec<BTreeSet<UnitId>>,
    pub assembly: Option<CellAssembly>,
}

#[derive(Debug, Clone)]
pub struct Hierarchy {
    width: usize,
    height: usize,
    pub params: VpsParams,
    units: Vec<VisualUnit>,
    names: BTreeMap<String, UnitId>,
    inputs: BTreeMap<(usize, usize, String), UnitId>,
    prev_fired: BTreeSet<UnitId>,
    learning_ticks: u64,
}

impl Hierarchy {
    pub fn new(width: usize, height: usize, params: VpsParams) -> Self {
        Self {
            width,
            height,
            params,
            units: Vec::new(),
            names: BTreeMap::new(),
            inputs: BTreeMap::new(),
            prev_fired: BTreeSet::new(),
            learning_ticks: 0,
        }
    }

    /// Four layers of untrained units tiling the grid, with receptive fields
    /// of `base` cells per side at V1 doubling at each layer.
    pub fn tiled(width: usize, height: usize, base: usize, threshold: f64, params: VpsParams) -> Result<Self, VpsError> {
        let mut h = Self::new(width, height, params);
        for (layer, name) in LAYER_NAMES.iter().enumerate() {
            let side = base << layer;
            for y in (0..height).step_by(side) {
                for x in (0..width).step_by(side) {
                    if x + side <= width && y + side <= height {
                        let rf = Rect { x, y, w: side, h: side };
                        h.add_unit(&format!("{name}@{x},{y}"), layer, rf, threshold)?;
                    }
                }
            }
        }
        Ok(h)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn add_unit(&mut self, name: &str, layer: usize, rf: Rect, threshold: f64) -> Result<UnitId, VpsError> {
        if layer >= LAYER_NAMES.len() {
            return Err(VpsError::NoSuchLayer(layer));
        }
        if self.names.contains_key(name) {
            return Err(VpsError::DuplicateUnit(name.to_owned()));
        }
        if rf.x + rf.w > self.width || rf.y + rf.h > self.height || rf.w == 0 || rf.h == 0 {
            return Err(VpsError::OutOfBounds { x: (rf.x + rf.w) as i64, y: (rf.y + rf.h) as i64 });
        }
        let id = UnitId(self.units.len() as u32);
        let mut cph = self.params.cph;
        cph.w_max = self.params.w_max;
        self.units.push(VisualUnit {
            name: name.to_owned(),
            layer,
            receptive_field: rf,
            tuned_feature: None,
            neuron: NeuronUnit::new(id, threshold, cph),
            excitatory_lateral: BTreeMap::new(),
            inhibitory_lateral: BTreeMap::new(),
        });
        self.names.insert(name.to_owned(), id);
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Result<UnitId, VpsError> {
        self.names.get(name).copied().ok_or_else(|| VpsError::UnknownUnit(name.to_owned()))
    }

    pub fn unit(&self, id: UnitId) -> &VisualUnit {
        &self.units[id.0 as usize]
    }

    pub fn unit_mut(&mut self, id: UnitId) -> &mut VisualUnit {
        &mut self.units[id.0 as usize]
    }

    pub fn units(&self) -> impl Iterator<Item = (UnitId, &VisualUnit)> {
        self.units.iter().enumerate().map(|(i, u)| (UnitId(i as u32), u))
    }

    pub fn name(&self, id: UnitId) -> &str {
        &self.units[id.0 as usize].name
    }

    pub fn names_of(&self, ids: &BTreeSet<UnitId>) -> Vec<String> {
        ids.iter().map(|&u| self.name(u).to_owned()).collect()
    }

    fn check_pair(&self, a: UnitId, b: UnitId) -> Result<(), VpsError> {
        let n = self.units.len() as u32;
        if a == b || a.0 >= n || b.0 >= n || self.unit(a).layer != self.unit(b).layer {
            return Err(VpsError::BadLateral);
        }
        Ok(())
    }

    pub fn set_lateral(&mut self, a: UnitId, b: UnitId, weight: f64) -> Result<(), VpsError> {
        self.check_pair(a, b)?;
        let w = weight.clamp(0.0, self.params.w_max);
        self.unit_mut(a).excitatory_lateral.insert(b, w);
        Ok(())
    }

    pub fn set_inhibitory(&mut self, pre: UnitId, post: UnitId, weight: f64) -> Result<(), VpsError> {
        self.check_pair(pre, post)?;
        let w = weight.clamp(0.0, self.params.w_max);
        self.unit_mut(pre).inhibitory_lateral.insert(post, w);
        Ok(())
    }

    pub fn lateral_weight(&self, a: UnitId, b: UnitId) -> f64 {
        self.unit(a).excitatory_lateral.get(&b).copied().unwrap_or(0.0)
    }

    pub fn inhibitory_weight(&self, pre: UnitId, post: UnitId) -> f64 {
        self.unit(pre).inhibitory_lateral.get(&post).copied().unwrap_or(0.0)
    }

    /// Sequential-firing update: `a → b` gains `eta_lat`, the reverse trace
    /// gains `eta_lat · symmetric_factor`. Returns the new `a → b` weight.
    pub fn lateral_update(&mut self, a: UnitId, b: UnitId, fired_a_then_b: bool) -> Result<f64, VpsError> {
        self.check_pair(a, b)?;
        if fired_a_then_b {
            let (eta, sym, cap) = (self.params.eta_lat, self.params.symmetric_factor, self.params.w_max);
            let fwd = self.unit_mut(a).excitatory_lateral.entry(b).or_insert(0.0);
            *fwd = (*fwd + eta).min(cap);
            let back = self.unit_mut(b).excitatory_lateral.entry(a).or_insert(0.0);
            *back = (*back + eta * sym).min(cap);
        }
        Ok(self.lateral_weight(a, b))
    }

    /// Applies the anti-Hebbian rule to the edge `pre → post` for one trial in
    /// which `pre` fired. Returns the new weight.
    pub fn inhibitory_update(&mut self, pre: UnitId, post: UnitId, post_fired: bool) -> Result<f64, VpsError> {
        self.check_pair(pre, post)?;
        let (eta, cap) = (self.params.eta_inh, self.params.w_max);
        let w = self.unit_mut(pre).inhibitory_lateral.entry(post).or_insert(0.0);
        *w = inhibitory_update(*w, true, post_fired, eta, cap);
        Ok(*w)
    }

    /// Transitive closure of `fired` along lateral links of weight ≥ θ_bidir.
    pub fn lateral_closure(&self, fired: &BTreeSet<UnitId>) -> BTreeSet<UnitId> {
        let mut out = fired.clone();
        let mut frontier: Vec<UnitId> = fired.iter().copied().collect();
        while let Some(u) = frontier.pop() {
            for (&v, &w) in &self.unit(u).excitatory_lateral {
                if w >= self.params.theta_bidir && out.insert(v) {
                    frontier.push(v);
                }
            }
        }
        out
    }

    /// Lateral completion with plasticity: recruited units potentiate their
    /// current presynaptic window as if they had fired feedforward.
    pub fn lateral_complete(
        &mut self,
        fired: &BTreeSet<UnitId>,
        windows: &BTreeMap<UnitId, Vec<FiringPattern>>,
    ) -> BTreeSet<UnitId> {
        let closed = self.lateral_closure(fired);
        for u in closed.difference(fired) {
            if let Some(w) = windows.get(u) {
                self.unit_mut(*u).neuron.cph_update(w, true);
            }
        }
        closed
    }

    fn input_id(&mut self, x: usize, y: usize, feature: &str) -> UnitId {
        let next = UnitId(self.inputs.len() as u32);
        *self.inputs.entry((x, y, feature.to_owned())).or_insert(next)
    }

    fn layer_zero_window(&mut self, rf: Rect, stim: &FeatureStimulus) -> Vec<FiringPattern> {
        let cells: Vec<(usize, usize, String, u8)> = stim
            .active_cells()
            .filter(|(x, y, _)| rf.contains_point(*x, *y))
            .map(|(x, y, c)| (x, y, c.feature.clone(), c.rate))
            .collect();
        cells
            .into_iter()
            .filter_map(|(x, y, f, r)| FiringPattern::new(self.input_id(x, y, &f), r).ok())
            .collect()
    }

    /// Feedforward sweep with within-layer inhibition and lateral closure.
    /// Does not learn.
    pub fn present(&mut self, stim: &FeatureStimulus) -> Result<Presentation, VpsError> {
        if stim.width() != self.width || stim.height() != self.height {
            return Err(VpsError::DimensionMismatch {
                want_w: self.width,
                want_h: self.height,
                got_w: stim.width(),
                got_h: stim.height(),
            });
        }
        let mut pres = Presentation::default();
        let mut below: BTreeSet<UnitId> = BTreeSet::new();
        for layer in 0..LAYER_NAMES.len() {
            let ids: Vec<UnitId> = self.units().filter(|(_, u)| u.layer == layer).map(|(i, _)| i).collect();
            let mut raw = BTreeSet::new();
            for &id in &ids {
                let rf = self.unit(id).receptive_field;
                let window = if layer == 0 {
                    self.layer_zero_window(rf, stim)
                } else {
                    below
                        .iter()
                        .filter(|&&b| rf.strictly_contains(&self.unit(b).receptive_field))
                        .map(|&b| FiringPattern::saturated(b))
                        .collect()
                };
                let n = &self.unit(id).neuron;
                let exc = n.excitation(&window);
                if exc > 0.0 && exc >= n.threshold {
                    raw.insert(id);
                }
                pres.excitation.insert(id, exc);
                pres.windows.insert(id, window);
            }
            let mut ff = BTreeSet::new();
            for &id in &raw {
                let inh: f64 = raw.iter().filter(|&&p| p != id).map(|&p| self.inhibitory_weight(p, id)).sum();
                let net = pres.excitation[&id] - inh;
                pres.excitation.insert(id, net.max(0.0));
                if net >= self.unit(id).neuron.threshold {
                    ff.insert(id);
                }
            }
            let closed = self.lateral_closure(&ff);
            let lateral: BTreeSet<UnitId> = closed.difference(&ff).copied().collect();
            below = closed;
            pres.layers.push(LayerActivity { feedforward: ff, lateral });
        }
        Ok(pres)
    }

    /// Presentation without any plasticity and without touching sequence state.
    pub fn probe(&mut self, stim: &FeatureStimulus) -> Result<BTreeSet<UnitId>, VpsError> {
        Ok(self.present(stim)?.fired())
    }

    /// One learning tick: present, then apply feedforward, lateral and
    /// inhibitory plasticity and optional homeostasis.
    pub fn step(&mut self, stim: &FeatureStimulus) -> Result<Presentation, VpsError> {
        let pres = self.present(stim)?;
        let fired = pres.fired();
        for (id, window) in &pres.windows {
            let f = fired.contains(id);
            self.units[id.0 as usize].neuron.cph_update(window, f);
        }
        let prev = std::mem::take(&mut self.prev_fired);
        for &a in &prev {
            for &b in &fired {
                if a != b && self.unit(a).layer == self.unit(b).layer {
                    self.lateral_update(a, b, true)?;
                }
            }
        }
        let (eta, cap) = (self.params.eta_inh, self.params.w_max);
        for &pre in &fired {
            let unit = &mut self.units[pre.0 as usize];
            for (post, w) in unit.inhibitory_lateral.iter_mut() {
                *w = inhibitory_update(*w, true, fired.contains(post), eta, cap);
            }
        }
        self.learning_ticks += 1;
        let k = u64::from(self.params.homeostasis_interval);
        if k > 0 && self.learning_ticks.is_multiple_of(k) {
            for u in &mut self.units {
                if u.neuron.homeostatic_target > 0.0 {
                    u.neuron.homeostatic_rescale();
                }
            }
        }
        self.prev_fired = fired;
        Ok(pres)
    }

    /// Potentiates a unit's window for `stim` `repeats` times, as prior
    /// experience would.
    pub fn tune(&mut self, unit: UnitId, stim: &FeatureStimulus, repeats: u32) -> Result<(), VpsError> {
        let pres = self.present(stim)?;
        let window = pres.windows.get(&unit).cloned().unwrap_or_default();
        let eta = self.params.cph.eta_plus;
        for _ in 0..repeats {
            self.unit_mut(unit).neuron.potentiate(&window, eta);
        }
        Ok(())
    }

    /// Forgets which units fired on the previous tick.
    pub fn clear_sequence(&mut self) {
        self.prev_fired.clear();
    }

    /// Maximal cliques over links that are ≥ θ_bidir in both directions.
    pub fn assemblies(&self) -> Vec<CellAssembly> {
        let theta = self.params.theta_bidir;
        let mut adj: BTreeMap<UnitId, BTreeSet<UnitId>> = BTreeMap::new();
        for (a, u) in self.units() {
            for (&b, &w) in &u.excitatory_lateral {
                if w >= theta && self.lateral_weight(b, a) >= theta {
                    adj.entry(a).or_default().insert(b);
                }
            }
        }
        maximal_cliques(&adj)
            .into_iter()
            .map(|members| {
                let label = members.iter().map(|&m| self.name(m)).collect::<Vec<_>>().join("+");
                CellAssembly { members, label }
            })
            .collect()
    }

    pub fn run_invariance_protocol(&mut self, proto: &MovingObjectProtocol) -> Result<ProtocolReport, VpsError> {
        let mut frames = Vec::with_capacity(proto.trajectory.len());
        for &(x, y) in &proto.trajectory {
            let stim = proto.shape.render(self.width, self.height, x, y)?;
            let seen = stim.active_cells().any(|(cx, cy, _)| {
                self.units.iter().any(|u| u.layer == 0 && u.receptive_field.contains_point(cx, cy))
            });
            if !seen {
                return Err(VpsError::DegenerateProtocol);
            }
            frames.push(stim);
        }
        let blank = FeatureStimulus::blank(self.width, self.height);
        let mut ticks = Vec::new();
        for _ in 0..proto.passes {
            for f in &frames {
                ticks.push(self.step(f)?.fired());
            }
            for _ in 0..proto.gap_ticks {
                ticks.push(self.step(&blank)?.fired());
            }
        }
        Ok(ProtocolReport { ticks, assembly: self.assemblies().into_iter().next() })
    }
}
