use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

use super::{ReplayDirection, SemanticError, SemanticGraph};
use crate::PerceptId;

/// A target's incoming weights over feature subsets, in units of
/// `w = eta_plus * repeats`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationalPrototype {
    pub target: PerceptId,
    pub weights: BTreeMap<Vec<PerceptId>, f64>,
}

impl RelationalPrototype {
    pub fn weight(&self, key: &[PerceptId]) -> f64 {
        let mut k = key.to_vec();
        k.sort();
        self.weights.get(&k).copied().unwrap_or(0.0)
    }
}

impl SemanticGraph {
    /// Replays each `(features, target)` observation onto the target and reads
    /// the resulting weights back over subsets of the observed features.
    pub fn build_prototype(
        &mut self,
        observations: &[(Vec<PerceptId>, PerceptId)],
        repeats: u32,
    ) -> Result<RelationalPrototype, SemanticError> {
        let target = observations.first().map(|o| o.1).ok_or(SemanticError::BadObservations)?;
        if observations.iter().any(|o| o.1 != target) {
            return Err(SemanticError::BadObservations);
        }
        for (features, _) in observations {
            self.consolidate_replay(&[features.clone(), vec![target]], ReplayDirection::Forward, repeats)?;
        }
        let seen: BTreeSet<PerceptId> = observations.iter().flat_map(|o| o.0.iter().copied()).collect();
        let unit = self.params.cph.eta_plus * f64::from(repeats.max(1));
        let mut weights = BTreeMap::new();
        if let Some(store) = self.relation_store(target) {
            for (k, w) in store.inputs() {
                let ids: Vec<PerceptId> = k.patterns().iter().map(|p| PerceptId(crate::cph::Pattern::unit(p).0)).collect();
                if ids.iter().all(|p| seen.contains(p)) {
                    weights.insert(ids, w / unit);
                }
            }
        }
        Ok(RelationalPrototype { target, weights })
    }
}
