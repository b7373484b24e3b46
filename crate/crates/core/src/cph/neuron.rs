use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{canonical_window, enumerate_subsets, CphParams, FiringPattern, Pattern, PatternKey};
use crate::UnitId;

/// A neuron and its complementary-input store.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronUnit<P: Pattern = FiringPattern> {
    id: UnitId,
    store: BTreeMap<PatternKey<P>, f64>,
    /// Firing threshold on summed excitation.
    pub threshold: f64,
    /// Total weight the store is rescaled to by [`NeuronUnit::homeostatic_rescale`].
    pub homeostatic_target: f64,
    pub params: CphParams,
}

/// Result of a single excitation query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub fired: bool,
    pub excitation: f64,
}

/// One weight change made by a plasticity step.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDelta<P: Pattern = FiringPattern> {
    pub key: PatternKey<P>,
    pub before: f64,
    pub after: f64,
}

impl<P: Pattern> NeuronUnit<P> {
    pub fn new(id: UnitId, threshold: f64, params: CphParams) -> Self {
        Self { id, store: BTreeMap::new(), threshold, homeostatic_target: 0.0, params }
    }

    pub fn id(&self) -> UnitId {
        self.id
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn weight(&self, key: &PatternKey<P>) -> f64 {
        self.store.get(key).copied().unwrap_or(0.0)
    }

    /// Stored inputs in canonical order.
    pub fn inputs(&self) -> impl Iterator<Item = (&PatternKey<P>, f64)> {
        self.store.iter().map(|(k, w)| (k, *w))
    }

    pub fn total_weight(&self) -> f64 {
        self.store.values().sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.store.values().copied().fold(0.0, f64::max)
    }

    /// Sets a weight directly, clamped to `[0, w_max]`. Zero removes the entry.
    pub fn set_weight(&mut self, key: PatternKey<P>, weight: f64) {
        let w = weight.clamp(0.0, self.params.w_max);
        if w > 0.0 {
            self.store.insert(key, w);
        } else {
            self.store.remove(&key);
        }
    }

    /// Sum of weights of stored inputs fully matched by `active`.
    pub fn excitation(&self, active: &[P]) -> f64 {
        let active = canonical_window(active);
        let tol = self.params.rate_tolerance;
        self.store
            .iter()
            .filter(|(k, _)| k.matched_by(&active, tol))
            .map(|(_, w)| *w)
            .sum()
    }

    /// Stored inputs fully matched by `active`, with their weights.
    pub fn matched_inputs(&self, active: &[P]) -> Vec<(PatternKey<P>, f64)> {
        let active = canonical_window(active);
        let tol = self.params.rate_tolerance;
        self.store
            .iter()
            .filter(|(k, _)| k.matched_by(&active, tol))
            .map(|(k, w)| (k.clone(), *w))
            .collect()
    }

    pub fn step(&self, active: &[P]) -> StepOutcome {
        let excitation = self.excitation(active);
        StepOutcome { fired: excitation >= self.threshold, excitation }
    }

    /// Complementary plasticity for one tick.
    ///
    /// Firing potentiates every enumerated subset of the window by `eta_plus`;
    /// silence depresses every fully matched stored input by `eta_minus`.
    pub fn cph_update(&mut self, window: &[P], fired: bool) -> Vec<WeightDelta<P>> {
        if fired {
            self.potentiate(window, self.params.eta_plus)
        } else {
            self.depress(window, self.params.eta_minus)
        }
    }

    /// Adds `amount` to every enumerated subset of the window, capped at `w_max`.
    pub fn potentiate(&mut self, window: &[P], amount: f64) -> Vec<WeightDelta<P>> {
        let w = canonical_window(window);
        if w.is_empty() || amount <= 0.0 {
            return Vec::new();
        }
        let cap = self.params.order.cap_for(w.len());
        let w_max = self.params.w_max;
        enumerate_subsets(&w, cap)
            .into_iter()
            .map(|key| {
                let slot = self.store.entry(key.clone()).or_insert(0.0);
                let before = *slot;
                *slot = (before + amount).min(w_max);
                WeightDelta { key, before, after: *slot }
            })
            .collect()
    }

    /// Subtracts `amount` from every stored input the window fully matches,
    /// flooring at zero and pruning emptied entries.
    pub fn depress(&mut self, window: &[P], amount: f64) -> Vec<WeightDelta<P>> {
        let w = canonical_window(window);
        if w.is_empty() || amount <= 0.0 {
            return Vec::new();
        }
        let tol = self.params.rate_tolerance;
        let hit: Vec<PatternKey<P>> =
            self.store.keys().filter(|k| k.matched_by(&w, tol)).cloned().collect();
        let mut out = Vec::with_capacity(hit.len());
        for key in hit {
            let before = self.store[&key];
            let after = (before - amount).max(0.0);
            if after > 0.0 {
                self.store.insert(key.clone(), after);
            } else {
                self.store.remove(&key);
            }
            out.push(WeightDelta { key, before, after });
        }
        out
    }

    /// Signed update used by neuromodulation: positive amounts potentiate the
    /// window's subsets, negative amounts depress matched inputs.
    pub fn adjust(&mut self, window: &[P], amount: f64) -> Vec<WeightDelta<P>> {
        if amount >= 0.0 {
            self.potentiate(window, amount)
        } else {
            self.depress(window, -amount)
        }
    }

    /// Multiplies every weight by one factor so the total approaches
    /// `homeostatic_target` without any weight exceeding `w_max`. Returns the
    /// factor applied.
    pub fn homeostatic_rescale(&mut self) -> f64 {
        let total = self.total_weight();
        if total <= 0.0 || self.homeostatic_target <= 0.0 {
            return 1.0;
        }
        let mut factor = self.homeostatic_target / total;
        let max = self.max_weight();
        if max * factor > self.params.w_max {
            factor = self.params.w_max / max;
        }
        for w in self.store.values_mut() {
            *w *= factor;
        }
        factor
    }
}

impl NeuronUnit<FiringPattern> {
    /// One line per stored input: `unit:rate,...<TAB>weight`, in canonical order.
    pub fn dump_store(&self) -> String {
        let mut s = String::new();
        for (k, w) in &self.store {
            let _ = writeln!(s, "{k}\t{w}");
        }
        s
    }
}

/// Anti-Hebbian inhibitory plasticity: a presynaptic spike onto a silent target
/// strengthens inhibition, onto a co-firing target weakens it.
pub fn inhibitory_update(weight: f64, pre_fired: bool, post_fired: bool, eta: f64, w_max: f64) -> f64 {
    match (pre_fired, post_fired) {
        (true, false) => (weight + eta).min(w_max),
        (true, true) => (weight - eta).max(0.0),
        _ => weight,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(u: u32, r: u8) -> FiringPattern {
        FiringPattern::new(UnitId(u), r).unwrap()
    }

    fn neuron(theta: f64) -> NeuronUnit {
        NeuronUnit::new(UnitId(100), theta, CphParams::default())
    }

    #[test]
    fn firing_potentiates_all_subsets() {
        let mut n = neuron(1.0);
        let d = n.cph_update(&[fp(1, 9), fp(2, 5)], true);
        assert_eq!(d.len(), 3);
        assert_eq!(n.total_weight(), 3.0);
        assert_eq!(n.excitation(&[fp(1, 9), fp(2, 5)]), 3.0);
        assert_eq!(n.excitation(&[fp(1, 8)]), 1.0);
    }

    #[test]
    fn silence_depresses_only_matched() {
        let mut n = neuron(1.0);
        n.cph_update(&[fp(1, 9), fp(2, 5)], true);
        n.cph_update(&[fp(1, 9)], false);
        assert_eq!(n.weight(&PatternKey::new([fp(1, 9)])), 0.75);
        assert_eq!(n.weight(&PatternKey::new([fp(2, 5)])), 1.0);
        assert_eq!(n.weight(&PatternKey::new([fp(1, 9), fp(2, 5)])), 1.0);
    }

    #[test]
    fn depression_prunes_at_zero() {
        let mut n = neuron(1.0);
        n.cph_update(&[fp(1, 9)], true);
        for _ in 0..5 {
            n.cph_update(&[fp(1, 9)], false);
        }
        assert!(n.is_empty());
    }

    #[test]
    fn threshold_is_inclusive() {
        let mut n = neuron(3.0);
        n.cph_update(&[fp(1, 9), fp(2, 5)], true);
        assert!(n.step(&[fp(1, 9), fp(2, 5)]).fired);
        assert!(!n.step(&[fp(1, 9)]).fired);
    }

    #[test]
    fn rescale_respects_cap() {
        let mut n = neuron(1.0);
        n.params.w_max = 4.0;
        n.cph_update(&[fp(1, 9), fp(2, 9)], true);
        n.cph_update(&[fp(1, 9)], true);
        n.homeostatic_target = 40.0;
        let f = n.homeostatic_rescale();
        assert_eq!(f, 2.0);
        assert_eq!(n.max_weight(), 4.0);
    }

    #[test]
    fn dump_is_sorted() {
        let mut n = neuron(1.0);
        n.cph_update(&[fp(2, 3), fp(1, 9)], true);
        assert_eq!(n.dump_store(), "1:9\t1\n1:9,2:3\t1\n2:3\t1\n");
    }

    #[test]
    fn inhibitory_rule() {
        assert_eq!(inhibitory_update(1.0, true, false, 0.5, 10.0), 1.5);
        assert_eq!(inhibitory_update(1.0, true, true, 0.5, 10.0), 0.5);
        assert_eq!(inhibitory_update(0.2, true, true, 0.5, 10.0), 0.0);
        assert_eq!(inhibitory_update(1.0, false, true, 0.5, 10.0), 1.0);
    }
}
