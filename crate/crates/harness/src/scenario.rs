//! Scenario documents: declarations plus an ordered list of phases.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use cogsim_core::executive::InternalOp;
use cogsim_core::ops::{MachineParams, ProgramCall, Region};
use cogsim_core::semantic::{InterferenceVariant, Modality, ProtocolParams, ReplayDirection, RetrievalMode};
use cogsim_core::temporal::SpecificityClass;
use cogsim_core::vps::{Rect, ShapeTemplate, VpsParams};

use crate::assertion::Assertion;

/// Current schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// A percept reference: `label` or `label(modality)`.
pub type PRef = String;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    pub seed: u64,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub params: MachineParams,
    #[serde(default)]
    pub percepts: Vec<PerceptDecl>,
    #[serde(default)]
    pub actions: Vec<ActionDecl>,
    /// Percepts that veto external actions while active.
    #[serde(default)]
    pub suppressors: Vec<PRef>,
    /// Received-reward table.
    #[serde(default)]
    pub rewards: BTreeMap<PRef, f64>,
    #[serde(default)]
    pub visual: Option<VisualDecl>,
    pub phases: Vec<Phase>,
    /// Checked after the last phase.
    #[serde(default)]
    pub assertions: Vec<Assertion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerceptDecl {
    pub label: String,
    pub modality: Modality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDecl {
    pub id: String,
    /// Motor label of an external action.
    #[serde(default)]
    pub external: Option<String>,
    #[serde(default)]
    pub internal: Option<InternalOp>,
    #[serde(default)]
    pub region: Option<Region>,
    #[serde(default)]
    pub payload: Vec<PRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisualDecl {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub params: VpsParams,
    pub units: Vec<VisualUnitDecl>,
    #[serde(default)]
    pub shapes: BTreeMap<String, ShapeTemplate>,
    /// `[pre, post, weight]` inhibitory edges.
    #[serde(default)]
    pub inhibitory: Vec<(String, String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VisualUnitDecl {
    pub name: String,
    #[serde(default)]
    pub layer: usize,
    pub rf: Rect,
    pub threshold: f64,
    #[serde(default)]
    pub homeostatic_target: f64,
}

/// A shape placed on the grid; no shape means a blank frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StimRef {
    #[serde(default)]
    pub shape: Option<String>,
    #[serde(default)]
    pub at: (i64, i64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Train(TrainOp),
    Replay(ReplayOp),
    Probe(Probe),
    Program(ProgramPhase),
    Assert(AssertPhase),
}

impl Phase {
    pub fn kind(&self) -> &'static str {
        match self {
            Phase::Train(_) => "train",
            Phase::Replay(_) => "replay",
            Phase::Probe(_) => "probe",
            Phase::Program(_) => "program",
            Phase::Assert(_) => "assert",
        }
    }
}

fn one() -> u32 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrainOp {
    /// Plasticity of `target` against the window `sources`.
    Relation {
        sources: Vec<PRef>,
        target: PRef,
        #[serde(default = "one")]
        repeats: u32,
        #[serde(default = "yes")]
        fired: bool,
    },
    /// Registers and consolidates the penguin/mynah schema.
    PenguinSchema {
        #[serde(default)]
        params: ProtocolParams,
    },
    TemporalSequence {
        episode: Vec<(PRef, u64)>,
        target: PRef,
        target_tick: u64,
        #[serde(default)]
        context: Vec<PRef>,
        #[serde(default = "one")]
        repeats: u32,
        #[serde(default)]
        threshold: Option<f64>,
    },
    /// Stores an episodic trace at the current tick.
    Episode {
        contexts: Vec<EpisodeContext>,
        #[serde(default)]
        salient: bool,
    },
    /// Sets the learned value of a percept context.
    Value { context: Vec<PRef>, value: f64 },
    Ffa {
        context: Vec<PRef>,
        action: String,
        #[serde(default = "one")]
        repeats: u32,
    },
    /// Random context/action pairings drawn from the scenario generator.
    Babble { contexts: Vec<Vec<PRef>>, steps: usize },
    Conditioning {
        cue: PRef,
        #[serde(default)]
        reward: Option<PRef>,
        #[serde(default)]
        reward_tick: u64,
        ticks: u64,
        trials: u32,
    },
    /// Registers digits and consolidates every single-digit fact except the withheld ones.
    Arithmetic {
        #[serde(default)]
        withheld: Vec<(u8, u8)>,
    },
    VpsTune {
        unit: String,
        stim: StimRef,
        #[serde(default = "one")]
        repeats: u32,
    },
    VpsInvariance {
        shape: String,
        trajectory: Vec<(i64, i64)>,
        passes: u32,
        #[serde(default = "one")]
        gap_ticks: u32,
    },
    /// Learning ticks over a stimulus sequence, repeated `cycles` times.
    VpsStream { sequence: Vec<StimRef>, cycles: u32 },
}

impl TrainOp {
    pub fn name(&self) -> &'static str {
        match self {
            TrainOp::Relation { .. } => "relation",
            TrainOp::PenguinSchema { .. } => "penguin_schema",
            TrainOp::TemporalSequence { .. } => "temporal_sequence",
            TrainOp::Episode { .. } => "episode",
            TrainOp::Value { .. } => "value",
            TrainOp::Ffa { .. } => "ffa",
            TrainOp::Babble { .. } => "babble",
            TrainOp::Conditioning { .. } => "conditioning",
            TrainOp::Arithmetic { .. } => "arithmetic",
            TrainOp::VpsTune { .. } => "vps_tune",
            TrainOp::VpsInvariance { .. } => "vps_invariance",
            TrainOp::VpsStream { .. } => "vps_stream",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeContext {
    pub tick: u64,
    pub percepts: BTreeMap<PRef, SpecificityClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReplayOp {
    /// Each context is the presynaptic window for the percepts of the next.
    Semantic {
        trace: Vec<Vec<PRef>>,
        #[serde(default = "forward")]
        direction: ReplayDirection,
        #[serde(default = "one")]
        repeats: u32,
    },
    Interference {
        variant: InterferenceVariant,
        #[serde(default)]
        params: ProtocolParams,
    },
    /// Advances the clock by `elapsed` ticks, then degrades episodic traces.
    Age { elapsed: u64 },
}

fn forward() -> ReplayDirection {
    ReplayDirection::Forward
}

impl ReplayOp {
    pub fn name(&self) -> &'static str {
        match self {
            ReplayOp::Semantic { .. } => "semantic",
            ReplayOp::Interference { .. } => "interference",
            ReplayOp::Age { .. } => "age",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe {
    /// Key under which the result is kept for assertions.
    pub name: String,
    #[serde(flatten)]
    pub op: ProbeOp,
}

// `flatten` would swallow unknown keys, so the name is split off by hand.
impl<'de> Deserialize<'de> for Probe {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let mut map = serde_json::Map::deserialize(d)?;
        let name = match map.remove("name") {
            Some(serde_json::Value::String(s)) => s,
            Some(_) => return Err(D::Error::custom("`name` must be a string")),
            None => return Err(D::Error::missing_field("name")),
        };
        let op = ProbeOp::deserialize(serde_json::Value::Object(map)).map_err(D::Error::custom)?;
        Ok(Probe { name, op })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeOp {
    Retrieve {
        seed: Vec<PRef>,
        #[serde(default)]
        supplementary: Vec<PRef>,
        #[serde(default)]
        bias: BTreeMap<PRef, f64>,
        #[serde(default)]
        suppress: Vec<PRef>,
        #[serde(default)]
        hops: Option<u32>,
        /// Defaults to automatic for a lone seed with no context, controlled otherwise.
        #[serde(default)]
        mode: Option<RetrievalMode>,
    },
    Excitation { sources: Vec<PRef>, target: PRef },
    Prototype {
        observations: Vec<Observation>,
        #[serde(default = "one")]
        repeats: u32,
    },
    Predict {
        observed: Vec<(PRef, u64)>,
        now: u64,
        #[serde(default)]
        supplementary: Vec<PRef>,
        #[serde(default)]
        regular: Vec<PRef>,
    },
    Recall {
        cue: Vec<PRef>,
        #[serde(default = "one_usize")]
        min_match: usize,
    },
    /// One conditioning trial; learning stays on.
    Trial {
        cue: PRef,
        #[serde(default)]
        reward: Option<PRef>,
        #[serde(default)]
        reward_tick: u64,
        ticks: u64,
    },
    Value {
        context: Vec<PRef>,
        #[serde(default)]
        rollout: Vec<Vec<PRef>>,
    },
    Propose { context: Vec<PRef> },
    VpsProbe { stim: StimRef },
    VpsExcitation { stim: StimRef, unit: String },
    /// Mean pairwise firing correlation over a seeded random probe stream.
    VpsCorrelation {
        ticks: u32,
        mix: Vec<MixEntry>,
        groups: BTreeMap<String, Vec<(String, String)>>,
    },
    VpsAssemblies {},
}

fn one_usize() -> usize {
    1
}

impl ProbeOp {
    pub fn name(&self) -> &'static str {
        match self {
            ProbeOp::Retrieve { .. } => "retrieve",
            ProbeOp::Excitation { .. } => "excitation",
            ProbeOp::Prototype { .. } => "prototype",
            ProbeOp::Predict { .. } => "predict",
            ProbeOp::Recall { .. } => "recall",
            ProbeOp::Trial { .. } => "trial",
            ProbeOp::Value { .. } => "value",
            ProbeOp::Propose { .. } => "propose",
            ProbeOp::VpsProbe { .. } => "vps_probe",
            ProbeOp::VpsExcitation { .. } => "vps_excitation",
            ProbeOp::VpsCorrelation { .. } => "vps_correlation",
            ProbeOp::VpsAssemblies {} => "vps_assemblies",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observation {
    pub features: Vec<PRef>,
    pub target: PRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixEntry {
    pub stim: StimRef,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramPhase {
    pub name: String,
    pub call: ProgramCall<PRef>,
    /// Record a program failure as the result instead of aborting the run.
    #[serde(default)]
    pub allow_failure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssertPhase {
    pub assertions: Vec<Assertion>,
}
