use serde::{Deserialize, Serialize};

use super::{Modality, ReplayDirection, SemanticError, SemanticGraph};
use crate::PerceptId;

/// Mechanisms that stop an exception (`penguin ⇒ cannot fly`) from leaking
/// into the general rule (`mynah ⇒ fly`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterferenceVariant {
    WeakenUncorrelated,
    InterleavedReplay,
    Dilution,
    DirectInhibition,
    GatedInhibition,
}

impl InterferenceVariant {
    pub const ALL: [InterferenceVariant; 5] = [
        InterferenceVariant::WeakenUncorrelated,
        InterferenceVariant::InterleavedReplay,
        InterferenceVariant::Dilution,
        InterferenceVariant::DirectInhibition,
        InterferenceVariant::GatedInhibition,
    ];

    /// Whether the variant also stops `penguin` from activating `fly`.
    pub fn suppresses_fly_for_penguin(&self) -> bool {
        matches!(self, InterferenceVariant::DirectInhibition | InterferenceVariant::GatedInhibition)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolParams {
    /// Replay repeats for ordinary category and property edges.
    pub strong_repeats: u32,
    /// Mynah trials for weaken-uncorrelated.
    pub weaken_trials: u32,
    /// Cycles and bird→fly replays per cycle for interleaved replay.
    pub interleave_cycles: u32,
    pub interleave_ratio: u32,
    /// Replay repeats and post-replay total weight for dilution.
    pub dilution_repeats: u32,
    pub dilution_total: f64,
    /// Training trials for the inhibitory variants.
    pub inhibition_trials: u32,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            strong_repeats: 5,
            weaken_trials: 12,
            interleave_cycles: 8,
            interleave_ratio: 5,
            dilution_repeats: 5,
            dilution_total: 12.0,
            inhibition_trials: 10,
        }
    }
}

/// The percepts of the penguin/mynah schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PenguinSchema {
    pub penguin: PerceptId,
    pub mynah: PerceptId,
    pub bird: PerceptId,
    pub fly: PerceptId,
    pub cannot_fly: PerceptId,
    pub water: PerceptId,
    pub blubber: PerceptId,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterferenceReport {
    pub variant: InterferenceVariant,
    /// Excitation of `cannot fly` from `{mynah, bird, fly}` before and after.
    pub mynah_leak_before: f64,
    pub mynah_leak_after: f64,
    pub inhibitor_weight: Option<f64>,
}

impl PenguinSchema {
    /// Looks the schema up without creating anything.
    pub fn find(g: &SemanticGraph) -> Result<Self, SemanticError> {
        let get = |l: &str, m: Modality| g.lookup(l, m).ok_or(SemanticError::SchemaAbsent);
        let s = Self {
            penguin: get("penguin", Modality::Visual)?,
            mynah: get("mynah", Modality::Visual)?,
            bird: get("bird", Modality::Lexical)?,
            fly: get("fly", Modality::Lexical)?,
            cannot_fly: get("cannot fly", Modality::Lexical)?,
            water: get("water", Modality::Visual)?,
            blubber: get("blubber", Modality::Visual)?,
        };
        if g.weight(&[s.penguin], s.cannot_fly) <= 0.0 || g.weight(&[s.bird], s.fly) <= 0.0 {
            return Err(SemanticError::SchemaAbsent);
        }
        Ok(s)
    }

    /// Registers the percepts and replays the schema: penguin and mynah are
    /// birds, birds fly, and one learning episode in which a flying-bird
    /// context preceded `cannot fly` for a penguin, followed by
    /// penguin-specific rehearsal.
    pub fn consolidate(g: &mut SemanticGraph, p: &ProtocolParams) -> Result<Self, SemanticError> {
        let s = Self {
            penguin: g.ensure("penguin", Modality::Visual),
            mynah: g.ensure("mynah", Modality::Visual),
            bird: g.ensure("bird", Modality::Lexical),
            fly: g.ensure("fly", Modality::Lexical),
            cannot_fly: g.ensure("cannot fly", Modality::Lexical),
            water: g.ensure("water", Modality::Visual),
            blubber: g.ensure("blubber", Modality::Visual),
        };
        let fwd = ReplayDirection::Forward;
        let k = p.strong_repeats;
        g.consolidate_replay(&[vec![s.penguin], vec![s.bird]], fwd, k)?;
        g.consolidate_replay(&[vec![s.mynah], vec![s.bird]], fwd, k)?;
        g.consolidate_replay(&[vec![s.bird], vec![s.fly]], fwd, k)?;
        g.consolidate_replay(&[vec![s.penguin, s.bird, s.fly], vec![s.cannot_fly]], fwd, 1)?;
        g.consolidate_replay(&[vec![s.penguin], vec![s.cannot_fly]], fwd, k.saturating_sub(1))?;
        Ok(s)
    }

    pub fn mynah_leak(&self, g: &SemanticGraph) -> f64 {
        g.excitation(&[self.mynah, self.bird, self.fly], self.cannot_fly)
    }
}

impl SemanticGraph {
    pub fn apply_interference_protocol(
        &mut self,
        variant: InterferenceVariant,
        p: &ProtocolParams,
    ) -> Result<InterferenceReport, SemanticError> {
        let s = PenguinSchema::find(self)?;
        let before = s.mynah_leak(self);
        let mut inhibitor_weight = None;
        match variant {
            InterferenceVariant::WeakenUncorrelated => {
                for _ in 0..p.weaken_trials {
                    self.relation_update(&[s.mynah, s.bird, s.fly], s.cannot_fly, false);
                    self.relation_update(&[s.mynah, s.bird], s.fly, true);
                }
            }
            InterferenceVariant::InterleavedReplay => {
                for _ in 0..p.interleave_cycles {
                    self.relation_update(&[s.penguin, s.bird], s.cannot_fly, true);
                    for _ in 0..p.interleave_ratio {
                        self.relation_update(&[s.bird], s.fly, true);
                        self.relation_update(&[s.bird, s.fly], s.cannot_fly, false);
                    }
                }
            }
            InterferenceVariant::Dilution => {
                let fwd = ReplayDirection::Forward;
                self.consolidate_replay(&[vec![s.penguin], vec![s.water, s.blubber]], fwd, p.strong_repeats)?;
                let all = vec![s.penguin, s.bird, s.fly, s.water, s.blubber];
                self.consolidate_replay(&[all, vec![s.cannot_fly]], fwd, p.dilution_repeats)?;
                self.rescale(s.cannot_fly, p.dilution_total);
            }
            InterferenceVariant::DirectInhibition | InterferenceVariant::GatedInhibition => {
                let gate = if variant == InterferenceVariant::DirectInhibition {
                    vec![s.cannot_fly]
                } else {
                    vec![s.penguin, s.cannot_fly]
                };
                let idx = self.add_inhibitor(&gate, s.fly, 0.0)?;
                let mut w = 0.0;
                for _ in 0..p.inhibition_trials {
                    w = self.train_inhibitor(idx, &[s.penguin, s.bird, s.cannot_fly], false);
                }
                inhibitor_weight = Some(w);
            }
        }
        Ok(InterferenceReport { variant, mynah_leak_before: before, mynah_leak_after: s.mynah_leak(self), inhibitor_weight })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantic::{RetrievalRequest, SemanticParams};

    #[test]
    fn schema_shows_interference_then_each_variant_fixes_mynah() {
        for v in InterferenceVariant::ALL {
            let mut g = SemanticGraph::new(SemanticParams::default());
            assert_eq!(g.apply_interference_protocol(v, &ProtocolParams::default()).unwrap_err(), SemanticError::SchemaAbsent);
            let s = PenguinSchema::consolidate(&mut g, &ProtocolParams::default()).unwrap();
            let pen = g.retrieve(&RetrievalRequest::automatic(s.penguin, 6)).unwrap();
            assert!(pen.contains(s.fly) && pen.contains(s.cannot_fly));
            let r = g.apply_interference_protocol(v, &ProtocolParams::default()).unwrap();
            assert!(r.mynah_leak_after <= r.mynah_leak_before);
            let my = g.retrieve(&RetrievalRequest::automatic(s.mynah, 6)).unwrap();
            assert!(my.contains(s.fly) && !my.contains(s.cannot_fly), "{v:?}");
            if v.suppresses_fly_for_penguin() {
                let pen = g.retrieve(&RetrievalRequest::automatic(s.penguin, 6)).unwrap();
                assert!(pen.contains(s.cannot_fly) && !pen.contains(s.fly), "{v:?}");
            }
        }
    }
}
