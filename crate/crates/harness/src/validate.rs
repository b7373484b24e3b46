//! Parsing with path diagnostics and reference checking.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use cogsim_core::executive::InternalOp;
use cogsim_core::ops::arithmetic_percepts;
use cogsim_core::semantic::{Modality, RetrievalMode};
use cogsim_core::vps::Rect;
use thiserror::Error;

use crate::assertion::Assertion;
use crate::scenario::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path} (line {line}, column {column}): {message}")]
    Syntax { path: String, line: usize, column: usize, message: String },
    #[error("invalid scenario: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Issue>),
}

impl ScenarioError {
    pub fn issues(&self) -> Vec<Issue> {
        match self {
            ScenarioError::Syntax { path, message, .. } => vec![Issue { path: path.clone(), message: message.clone() }],
            ScenarioError::Invalid(v) => v.clone(),
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let sc: Scenario = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Syntax { path, line: inner.line(), column: inner.column(), message: inner.to_string() }
    })?;
    de.end().map_err(|e| ScenarioError::Syntax {
        path: ".".into(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    validate(&sc)?;
    Ok(sc)
}

const PENGUIN: [(&str, Modality); 7] = [
    ("penguin", Modality::Visual),
    ("mynah", Modality::Visual),
    ("bird", Modality::Lexical),
    ("fly", Modality::Lexical),
    ("cannot fly", Modality::Lexical),
    ("water", Modality::Visual),
    ("blubber", Modality::Visual),
];

/// Splits `label(modality)` into its parts.
pub fn split_ref(r: &str) -> (&str, Option<&str>) {
    let r = r.trim();
    if let Some(open) = r.rfind('(') {
        if r.ends_with(')') {
            return (r[..open].trim(), Some(&r[open + 1..r.len() - 1]));
        }
    }
    (r, None)
}

#[derive(Default)]
struct Checker {
    percepts: BTreeMap<String, BTreeSet<Modality>>,
    actions: BTreeSet<String>,
    results: BTreeSet<String>,
    units: BTreeSet<String>,
    shapes: BTreeSet<String>,
    visual: Option<(usize, usize)>,
    arithmetic: bool,
    issues: Vec<Issue>,
}

impl Checker {
    fn issue(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(Issue { path: path.into(), message: message.into() });
    }

    fn declare(&mut self, label: &str, m: Modality) -> bool {
        self.percepts.entry(label.to_owned()).or_default().insert(m)
    }

    fn percept(&mut self, path: String, r: &str) {
        let (label, modality) = split_ref(r);
        let msg = match (self.percepts.get(label), modality) {
            (None, _) => format!("undeclared percept `{r}`"),
            (Some(ms), Some(m)) => match m.parse::<Modality>() {
                Ok(m) if ms.contains(&m) => return,
                Ok(_) => format!("undeclared percept `{r}`"),
                Err(_) => format!("unknown modality in `{r}`"),
            },
            (Some(ms), None) if ms.len() == 1 => return,
            (Some(_), None) => format!("ambiguous percept `{r}`; qualify it as label(modality)"),
        };
        self.issue(path, msg);
    }

    fn all(&mut self, path: &str, refs: &[PRef]) {
        for (i, r) in refs.iter().enumerate() {
            self.percept(format!("{path}[{i}]"), r);
        }
    }

    fn stim(&mut self, path: &str, s: &StimRef) {
        if let Some(name) = &s.shape {
            if !self.shapes.contains(name) {
                self.issue(format!("{path}.shape"), format!("unknown shape `{name}`"));
            }
        }
    }

    fn unit(&mut self, path: String, name: &str) {
        if !self.units.contains(name) {
            self.issue(path, format!("unknown visual unit `{name}`"));
        }
    }

    fn needs_visual(&mut self, path: &str) -> bool {
        if self.visual.is_none() {
            self.issue(path, "visual operation without a `visual` declaration");
            return false;
        }
        true
    }

    fn result_name(&mut self, path: String, name: &str) {
        if name.is_empty() {
            self.issue(path, "empty result name");
        } else if !self.results.insert(name.to_owned()) {
            self.issue(path, format!("duplicate result name `{name}`"));
        }
    }

    fn assertion(&mut self, path: String, a: &Assertion) {
        if !self.results.contains(&a.probe) {
            self.issue(format!("{path}.probe"), format!("no earlier probe or program named `{}`", a.probe));
        }
        if !a.path.is_empty() && !a.path.starts_with('/') {
            self.issue(format!("{path}.path"), "a JSON pointer must be empty or start with `/`");
        }
        if !a.has_predicate() {
            self.issue(path, "assertion has no predicate");
        }
    }
}

/// Checks every reference in a parsed scenario, in phase order.
pub fn validate(sc: &Scenario) -> Result<(), ScenarioError> {
    let mut c = Checker::default();
    if sc.schema != SCHEMA_VERSION {
        c.issue("schema", format!("unsupported schema version {} (expected {SCHEMA_VERSION})", sc.schema));
    }
    if sc.name.trim().is_empty() {
        c.issue("name", "scenario name is empty");
    }
    for (i, p) in sc.percepts.iter().enumerate() {
        if p.label.trim().is_empty() || p.label.contains(['(', ')']) {
            c.issue(format!("percepts[{i}].label"), format!("bad label `{}`", p.label));
        } else if !c.declare(&p.label, p.modality) {
            c.issue(format!("percepts[{i}]"), format!("duplicate percept `{}({})`", p.label, p.modality.as_str()));
        }
    }
    for (i, a) in sc.actions.iter().enumerate() {
        let path = format!("actions[{i}]");
        if !c.actions.insert(a.id.clone()) {
            c.issue(format!("{path}.id"), format!("duplicate action `{}`", a.id));
        }
        match (&a.external, a.internal) {
            (Some(_), None) => {}
            (None, Some(op)) => {
                if matches!(op, InternalOp::Ungate | InternalOp::Protect | InternalOp::Propagate) && a.region.is_none() {
                    c.issue(format!("{path}.region"), "this internal operation needs a region");
                }
            }
            _ => c.issue(path.clone(), "set exactly one of `external` or `internal`"),
        }
        c.all(&format!("{path}.payload"), &a.payload);
    }
    c.all("suppressors", &sc.suppressors);
    for r in sc.rewards.keys() {
        c.percept(format!("rewards.{r}"), r);
    }
    if let Some(v) = &sc.visual {
        c.visual = Some((v.width, v.height));
        let grid = Rect { x: 0, y: 0, w: v.width, h: v.height };
        for (i, u) in v.units.iter().enumerate() {
            if !c.units.insert(u.name.clone()) {
                c.issue(format!("visual.units[{i}].name"), format!("duplicate unit `{}`", u.name));
            }
            if !grid.contains(&u.rf) || u.rf.w == 0 || u.rf.h == 0 {
                c.issue(format!("visual.units[{i}].rf"), "receptive field is empty or leaves the grid");
            }
            if u.threshold.is_nan() || u.threshold <= 0.0 {
                c.issue(format!("visual.units[{i}].threshold"), "threshold must be positive");
            }
        }
        c.shapes = v.shapes.keys().cloned().collect();
        for (i, (pre, post, _)) in v.inhibitory.iter().enumerate() {
            c.unit(format!("visual.inhibitory[{i}][0]"), pre);
            c.unit(format!("visual.inhibitory[{i}][1]"), post);
        }
    }
    for (i, ph) in sc.phases.iter().enumerate() {
        let path = format!("phases[{i}]");
        match ph {
            Phase::Train(op) => train(&mut c, &path, op),
            Phase::Replay(op) => replay(&mut c, &path, op),
            Phase::Probe(p) => probe(&mut c, &path, p),
            Phase::Program(p) => {
                let mut bad = Vec::new();
                let _ = p.call.clone().try_map(|r| {
                    bad.push(r);
                    Ok::<(), ()>(())
                });
                c.all(&format!("{path}.call"), &bad);
                c.result_name(format!("{path}.name"), &p.name);
            }
            Phase::Assert(a) => {
                for (j, a) in a.assertions.iter().enumerate() {
                    c.assertion(format!("{path}.assertions[{j}]"), a);
                }
            }
        }
    }
    for (j, a) in sc.assertions.iter().enumerate() {
        c.assertion(format!("assertions[{j}]"), a);
    }
    if c.issues.is_empty() {
        Ok(())
    } else {
        Err(ScenarioError::Invalid(c.issues))
    }
}

fn train(c: &mut Checker, path: &str, op: &TrainOp) {
    match op {
        TrainOp::Relation { sources, target, .. } => {
            c.all(&format!("{path}.sources"), sources);
            c.percept(format!("{path}.target"), target);
        }
        TrainOp::PenguinSchema { .. } => {
            for (l, m) in PENGUIN {
                c.declare(l, m);
            }
        }
        TrainOp::TemporalSequence { episode, target, target_tick, context, threshold, .. } => {
            for (j, (p, _)) in episode.iter().enumerate() {
                c.percept(format!("{path}.episode[{j}][0]"), p);
            }
            c.percept(format!("{path}.target"), target);
            c.all(&format!("{path}.context"), context);
            if !episode.iter().any(|(_, t)| t <= target_tick) {
                c.issue(format!("{path}.episode"), "no onset precedes the target");
            }
            if threshold.is_some_and(|t| t.is_nan() || t <= 0.0) {
                c.issue(format!("{path}.threshold"), "threshold must be positive");
            }
        }
        TrainOp::Episode { contexts, .. } => {
            if contexts.is_empty() {
                c.issue(format!("{path}.contexts"), "an episode needs at least one context");
            }
            for (j, ctx) in contexts.iter().enumerate() {
                for p in ctx.percepts.keys() {
                    c.percept(format!("{path}.contexts[{j}].percepts.{p}"), p);
                }
                if j > 0 && ctx.tick <= contexts[j - 1].tick {
                    c.issue(format!("{path}.contexts[{j}].tick"), "context ticks must increase");
                }
            }
        }
        TrainOp::Value { context, value } => {
            c.all(&format!("{path}.context"), context);
            if !value.is_finite() {
                c.issue(format!("{path}.value"), "value must be finite");
            }
        }
        TrainOp::Ffa { context, action, .. } => {
            c.all(&format!("{path}.context"), context);
            if !c.actions.contains(action) {
                c.issue(format!("{path}.action"), format!("undeclared action `{action}`"));
            }
        }
        TrainOp::Babble { contexts, .. } => {
            for (j, ctx) in contexts.iter().enumerate() {
                c.all(&format!("{path}.contexts[{j}]"), ctx);
            }
        }
        TrainOp::Conditioning { cue, reward, reward_tick, ticks, .. } => {
            c.percept(format!("{path}.cue"), cue);
            if let Some(r) = reward {
                c.percept(format!("{path}.reward"), r);
                if reward_tick >= ticks {
                    c.issue(format!("{path}.reward_tick"), "reward arrives after the trial ends");
                }
            }
        }
        TrainOp::Arithmetic { withheld } => {
            if c.arithmetic {
                c.issue(path, "arithmetic is already installed");
            }
            c.arithmetic = true;
            for (j, &(a, b)) in withheld.iter().enumerate() {
                if a > 9 || b > 9 {
                    c.issue(format!("{path}.withheld[{j}]"), "facts are single digits");
                }
            }
            for (l, m) in arithmetic_percepts() {
                c.declare(&l, m);
            }
            c.actions.insert("carry".into());
            c.actions.insert("bring down".into());
        }
        TrainOp::VpsTune { unit, stim, .. } => {
            if c.needs_visual(path) {
                c.unit(format!("{path}.unit"), unit);
                c.stim(&format!("{path}.stim"), stim);
            }
        }
        TrainOp::VpsInvariance { shape, trajectory, .. } => {
            if c.needs_visual(path) {
                if !c.shapes.contains(shape) {
                    c.issue(format!("{path}.shape"), format!("unknown shape `{shape}`"));
                }
                if trajectory.is_empty() {
                    c.issue(format!("{path}.trajectory"), "empty trajectory");
                }
            }
        }
        TrainOp::VpsStream { sequence, .. } => {
            if c.needs_visual(path) {
                for (j, s) in sequence.iter().enumerate() {
                    c.stim(&format!("{path}.sequence[{j}]"), s);
                }
            }
        }
    }
}

fn replay(c: &mut Checker, path: &str, op: &ReplayOp) {
    match op {
        ReplayOp::Semantic { trace, .. } => {
            if trace.len() < 2 {
                c.issue(format!("{path}.trace"), "a replay trace needs two or more contexts");
            }
            for (j, ctx) in trace.iter().enumerate() {
                if ctx.is_empty() {
                    c.issue(format!("{path}.trace[{j}]"), "empty context");
                }
                c.all(&format!("{path}.trace[{j}]"), ctx);
            }
        }
        ReplayOp::Interference { .. } => {
            if PENGUIN.iter().any(|(l, m)| !c.percepts.get(*l).is_some_and(|s| s.contains(m))) {
                c.issue(path, "interference replay needs the penguin schema");
            }
        }
        ReplayOp::Age { .. } => {}
    }
}

fn probe(c: &mut Checker, path: &str, p: &Probe) {
    match &p.op {
        ProbeOp::Retrieve { seed, supplementary, bias, suppress, hops, mode } => {
            if seed.is_empty() {
                c.issue(format!("{path}.seed"), "empty seed");
            }
            c.all(&format!("{path}.seed"), seed);
            c.all(&format!("{path}.supplementary"), supplementary);
            for k in bias.keys() {
                c.percept(format!("{path}.bias.{k}"), k);
            }
            c.all(&format!("{path}.suppress"), suppress);
            let plain = seed.len() == 1 && supplementary.is_empty() && bias.is_empty() && suppress.is_empty();
            if *mode == Some(RetrievalMode::Automatic) && !plain {
                c.issue(format!("{path}.mode"), "automatic retrieval takes one seed and no context");
            }
            if *hops == Some(0) {
                c.issue(format!("{path}.hops"), "hops must be at least 1");
            }
        }
        ProbeOp::Excitation { sources, target } => {
            c.all(&format!("{path}.sources"), sources);
            c.percept(format!("{path}.target"), target);
        }
        ProbeOp::Prototype { observations, .. } => {
            if observations.is_empty() {
                c.issue(format!("{path}.observations"), "no observations");
            }
            for (j, o) in observations.iter().enumerate() {
                c.all(&format!("{path}.observations[{j}].features"), &o.features);
                c.percept(format!("{path}.observations[{j}].target"), &o.target);
                if o.target != observations[0].target {
                    c.issue(format!("{path}.observations[{j}].target"), "observations must share one target");
                }
            }
        }
        ProbeOp::Predict { observed, supplementary, regular, .. } => {
            for (j, (o, _)) in observed.iter().enumerate() {
                c.percept(format!("{path}.observed[{j}][0]"), o);
            }
            c.all(&format!("{path}.supplementary"), supplementary);
            c.all(&format!("{path}.regular"), regular);
        }
        ProbeOp::Recall { cue, min_match } => {
            c.all(&format!("{path}.cue"), cue);
            if *min_match == 0 {
                c.issue(format!("{path}.min_match"), "min_match must be at least 1");
            }
        }
        ProbeOp::Trial { cue, reward, reward_tick, ticks } => {
            c.percept(format!("{path}.cue"), cue);
            if let Some(r) = reward {
                c.percept(format!("{path}.reward"), r);
                if reward_tick >= ticks {
                    c.issue(format!("{path}.reward_tick"), "reward arrives after the trial ends");
                }
            }
        }
        ProbeOp::Value { context, rollout } => {
            c.all(&format!("{path}.context"), context);
            for (j, r) in rollout.iter().enumerate() {
                c.all(&format!("{path}.rollout[{j}]"), r);
            }
        }
        ProbeOp::Propose { context } => c.all(&format!("{path}.context"), context),
        ProbeOp::VpsProbe { stim } => {
            if c.needs_visual(path) {
                c.stim(&format!("{path}.stim"), stim);
            }
        }
        ProbeOp::VpsExcitation { stim, unit } => {
            if c.needs_visual(path) {
                c.stim(&format!("{path}.stim"), stim);
                c.unit(format!("{path}.unit"), unit);
            }
        }
        ProbeOp::VpsCorrelation { mix, groups, ticks } => {
            if c.needs_visual(path) {
                if *ticks == 0 {
                    c.issue(format!("{path}.ticks"), "ticks must be at least 1");
                }
                if mix.is_empty() || mix.iter().any(|m| m.weight.is_nan() || m.weight < 0.0) || mix.iter().all(|m| m.weight == 0.0) {
                    c.issue(format!("{path}.mix"), "mix weights must be nonnegative with a positive total");
                }
                for (j, m) in mix.iter().enumerate() {
                    c.stim(&format!("{path}.mix[{j}].stim"), &m.stim);
                }
                for (g, pairs) in groups {
                    for (j, (a, b)) in pairs.iter().enumerate() {
                        c.unit(format!("{path}.groups.{g}[{j}][0]"), a);
                        c.unit(format!("{path}.groups.{g}[{j}][1]"), b);
                    }
                }
            }
        }
        ProbeOp::VpsAssemblies {} => {
            c.needs_visual(path);
        }
    }
    c.result_name(format!("{path}.name"), &p.name);
}
