use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::{SemanticError, SemanticGraph};
use crate::PerceptId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReplayDirection {
    Forward,
    Backward,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalMode {
    /// One cue, no top-down steering.
    Automatic,
    /// Cue plus supplementary percepts, bias and suppression.
    Controlled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalRequest {
    pub seed: Vec<PerceptId>,
    pub mode: RetrievalMode,
    pub supplementary: Vec<PerceptId>,
    pub bias: BTreeMap<PerceptId, f64>,
    pub suppress: BTreeSet<PerceptId>,
    pub hops: u32,
}

impl RetrievalRequest {
    pub fn automatic(seed: PerceptId, hops: u32) -> Self {
        Self {
            seed: vec![seed],
            mode: RetrievalMode::Automatic,
            supplementary: Vec::new(),
            bias: BTreeMap::new(),
            suppress: BTreeSet::new(),
            hops,
        }
    }

    pub fn controlled(seed: Vec<PerceptId>, supplementary: Vec<PerceptId>, hops: u32) -> Self {
        Self { seed, mode: RetrievalMode::Controlled, supplementary, ..Self::automatic(PerceptId(0), hops) }
    }
}

/// Per-hop activation. Hop 0 holds the seed and supplementary percepts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Activation {
    pub hops: Vec<Vec<PerceptId>>,
}

impl Activation {
    pub fn active(&self) -> BTreeSet<PerceptId> {
        self.hops.iter().flatten().copied().collect()
    }

    /// Percepts reached by propagation, excluding hop 0.
    pub fn retrieved(&self) -> BTreeSet<PerceptId> {
        self.hops.iter().skip(1).flatten().copied().collect()
    }

    pub fn contains(&self, p: PerceptId) -> bool {
        self.hops.iter().any(|h| h.contains(&p))
    }
}

impl SemanticGraph {
    /// Spreading activation. Once active a percept stays active; each hop adds
    /// every inactive, unsuppressed percept whose excitation plus bias minus
    /// gated inhibition reaches θ_p, until a fixpoint or the hop limit.
    pub fn retrieve(&self, req: &RetrievalRequest) -> Result<Activation, SemanticError> {
        if req.hops < 1 {
            return Err(SemanticError::ZeroHops);
        }
        if req.mode == RetrievalMode::Automatic
            && (req.seed.len() != 1 || !req.supplementary.is_empty() || !req.bias.is_empty() || !req.suppress.is_empty())
        {
            return Err(SemanticError::InvalidAutomatic);
        }
        self.check(&req.seed)?;
        self.check(&req.supplementary)?;
        let mut active: BTreeSet<PerceptId> = req.seed.iter().chain(&req.supplementary).copied().collect();
        let mut hops = vec![self.sorted(active.iter().copied())];
        let theta = self.params.theta_p;
        for _ in 0..req.hops.min(self.params.hop_cap.max(1)) {
            let act: Vec<PerceptId> = active.iter().copied().collect();
            let mut new = Vec::new();
            for p in self.percepts() {
                if active.contains(&p.id) || req.suppress.contains(&p.id) {
                    continue;
                }
                let drive = self.excitation(&act, p.id) + req.bias.get(&p.id).copied().unwrap_or(0.0)
                    - self.inhibition(&act, p.id);
                if drive > 0.0 && drive >= theta {
                    new.push(p.id);
                }
            }
            if new.is_empty() {
                break;
            }
            active.extend(new.iter().copied());
            hops.push(self.sorted(new));
        }
        Ok(Activation { hops })
    }

    fn sorted(&self, ids: impl IntoIterator<Item = PerceptId>) -> Vec<PerceptId> {
        let mut v: Vec<PerceptId> = ids.into_iter().collect();
        v.sort_by(|a, b| {
            let (pa, pb) = (self.percept(*a), self.percept(*b));
            (&pa.label, pa.modality).cmp(&(&pb.label, pb.modality))
        });
        v
    }
}
