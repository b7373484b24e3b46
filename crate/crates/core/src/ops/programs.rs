use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::{Machine, OpsError, Region, StepRecord, StepResult};
use crate::executive::{ActionId, ContextKey};
use crate::semantic::Modality;
use crate::PerceptId;

/// A decision option and the percepts imagined when considering it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prospect<P = PerceptId> {
    pub item: P,
    #[serde(default = "Vec::new")]
    pub imagined: Vec<P>,
}

/// A registered program with its arguments. `P` is the percept reference
/// type: labels in scenario files, ids once resolved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "program", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProgramCall<P = PerceptId> {
    StaticImagery { percepts: Vec<P> },
    DynamicImagery { cue: Vec<P> },
    Rp {
        observed: Vec<(P, u64)>,
        now: u64,
        #[serde(default = "Vec::new")]
        supplementary: Vec<P>,
    },
    Rt { percepts: Vec<P> },
    RuleInternalization {
        cue: Vec<P>,
        command: P,
        #[serde(default)]
        expiry: Option<u64>,
    },
    RuleActivation { context: Vec<P> },
    DecisionMaking { prospects: Vec<Prospect<P>> },
    BackwardRecitation { items: Vec<P> },
    TemporalProspectiveMemory { command: P, delay: u64 },
    Planning {
        goal: Vec<P>,
        #[serde(default = "Vec::new")]
        supplementary: Vec<P>,
        prospects: Vec<Prospect<P>>,
    },
    GeneralQuestionSolving {
        question: Vec<P>,
        #[serde(default = "Vec::new")]
        reformulations: Vec<Vec<P>>,
    },
    Addition { a: u64, b: u64 },
    ErrorDetection,
    HabitSuppression,
}

impl<P> ProgramCall<P> {
    pub fn name(&self) -> &'static str {
        match self {
            ProgramCall::StaticImagery { .. } => "static_imagery",
            ProgramCall::DynamicImagery { .. } => "dynamic_imagery",
            ProgramCall::Rp { .. } => "rp",
            ProgramCall::Rt { .. } => "rt",
            ProgramCall::RuleInternalization { .. } => "rule_internalization",
            ProgramCall::RuleActivation { .. } => "rule_activation",
            ProgramCall::DecisionMaking { .. } => "decision_making",
            ProgramCall::BackwardRecitation { .. } => "backward_recitation",
            ProgramCall::TemporalProspectiveMemory { .. } => "temporal_prospective_memory",
            ProgramCall::Planning { .. } => "planning",
            ProgramCall::GeneralQuestionSolving { .. } => "general_question_solving",
            ProgramCall::Addition { .. } => "addition",
            ProgramCall::ErrorDetection => "error_detection",
            ProgramCall::HabitSuppression => "habit_suppression",
        }
    }

    /// Resolves every percept reference with `f`.
    pub fn try_map<Q, E>(self, mut f: impl FnMut(P) -> Result<Q, E>) -> Result<ProgramCall<Q>, E> {
        let many = |v: Vec<P>, f: &mut dyn FnMut(P) -> Result<Q, E>| v.into_iter().map(f).collect::<Result<Vec<Q>, E>>();
        let pros = |v: Vec<Prospect<P>>, f: &mut dyn FnMut(P) -> Result<Q, E>| {
            v.into_iter()
                .map(|p| Ok(Prospect { item: f(p.item)?, imagined: p.imagined.into_iter().map(&mut *f).collect::<Result<_, E>>()? }))
                .collect::<Result<Vec<_>, E>>()
        };
        Ok(match self {
            ProgramCall::StaticImagery { percepts } => ProgramCall::StaticImagery { percepts: many(percepts, &mut f)? },
            ProgramCall::DynamicImagery { cue } => ProgramCall::DynamicImagery { cue: many(cue, &mut f)? },
            ProgramCall::Rp { observed, now, supplementary } => ProgramCall::Rp {
                observed: observed.into_iter().map(|(p, t)| Ok((f(p)?, t))).collect::<Result<_, E>>()?,
                now,
                supplementary: many(supplementary, &mut f)?,
            },
            ProgramCall::Rt { percepts } => ProgramCall::Rt { percepts: many(percepts, &mut f)? },
            ProgramCall::RuleInternalization { cue, command, expiry } => {
                ProgramCall::RuleInternalization { cue: many(cue, &mut f)?, command: f(command)?, expiry }
            }
            ProgramCall::RuleActivation { context } => ProgramCall::RuleActivation { context: many(context, &mut f)? },
            ProgramCall::DecisionMaking { prospects } => ProgramCall::DecisionMaking { prospects: pros(prospects, &mut f)? },
            ProgramCall::BackwardRecitation { items } => ProgramCall::BackwardRecitation { items: many(items, &mut f)? },
            ProgramCall::TemporalProspectiveMemory { command, delay } => {
                ProgramCall::TemporalProspectiveMemory { command: f(command)?, delay }
            }
            ProgramCall::Planning { goal, supplementary, prospects } => ProgramCall::Planning {
                goal: many(goal, &mut f)?,
                supplementary: many(supplementary, &mut f)?,
                prospects: pros(prospects, &mut f)?,
            },
            ProgramCall::GeneralQuestionSolving { question, reformulations } => ProgramCall::GeneralQuestionSolving {
                question: many(question, &mut f)?,
                reformulations: reformulations.into_iter().map(|q| many(q, &mut f)).collect::<Result<_, E>>()?,
            },
            ProgramCall::Addition { a, b } => ProgramCall::Addition { a, b },
            ProgramCall::ErrorDetection => ProgramCall::ErrorDetection,
            ProgramCall::HabitSuppression => ProgramCall::HabitSuppression,
        })
    }
}

/// Result of a program run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProgramOutput {
    pub program: String,
    /// Main result percepts, in emission order.
    pub percepts: Vec<PerceptId>,
    pub sequence: Vec<Vec<PerceptId>>,
    pub action: Option<ActionId>,
    pub value: Option<f64>,
    pub readout: Option<String>,
    pub steps: Vec<StepRecord>,
}

fn sorted(v: impl IntoIterator<Item = PerceptId>) -> Vec<PerceptId> {
    let s: BTreeSet<PerceptId> = v.into_iter().collect();
    s.into_iter().collect()
}

impl Machine {
    /// Runs a program to completion. Any failing step aborts the program and
    /// returns the steps completed so far.
    pub fn run_program(&mut self, call: &ProgramCall) -> Result<ProgramOutput, OpsError> {
        let name = call.name();
        if let ProgramCall::Addition { a, b } = *call {
            let start = self.log().len();
            let r = self.add(a, b)?;
            return Ok(ProgramOutput {
                program: name.into(),
                percepts: r.digits,
                readout: Some(r.readout),
                value: Some(r.carries as f64),
                steps: self.log()[start..].to_vec(),
                ..Default::default()
            });
        }
        let start = self.begin(name);
        let res = self.dispatch(call);
        let step = self.current_step();
        self.end();
        match res {
            Ok(mut out) => {
                out.program = name.into();
                out.steps = self.log()[start..].to_vec();
                Ok(out)
            }
            Err(OpsError::NotImplemented(n)) => Err(OpsError::NotImplemented(n)),
            Err(e @ OpsError::ProgramFailed { .. }) => Err(e),
            Err(e) => Err(OpsError::ProgramFailed {
                program: name.into(),
                step,
                reason: e.to_string(),
                completed: self.log()[start..].to_vec(),
            }),
        }
    }

    fn dispatch(&mut self, call: &ProgramCall) -> Result<ProgramOutput, OpsError> {
        match call {
            ProgramCall::StaticImagery { percepts } => {
                self.static_imagery(percepts)?;
                Ok(ProgramOutput { percepts: self.contents(Region::SensoryBuffer), ..Default::default() })
            }
            ProgramCall::DynamicImagery { cue } => {
                let seq = self.dynamic_imagery(cue)?;
                Ok(ProgramOutput { percepts: sorted(seq.iter().flatten().copied()), sequence: seq, ..Default::default() })
            }
            ProgramCall::Rp { observed, now, supplementary } => {
                let (atl, tps) = self.rp(observed, *now, supplementary)?;
                Ok(ProgramOutput {
                    percepts: sorted(atl.iter().chain(&tps).copied()),
                    sequence: vec![atl, tps],
                    ..Default::default()
                })
            }
            ProgramCall::Rt { percepts } => Ok(ProgramOutput { percepts: self.rt(percepts)?, ..Default::default() }),
            ProgramCall::RuleInternalization { cue, command, expiry } => {
                self.rule_internalization(Region::Dlpfc, cue, *command, *expiry)?;
                Ok(ProgramOutput { percepts: vec![*command], ..Default::default() })
            }
            ProgramCall::RuleActivation { context } => {
                self.load(Region::SensoryBuffer, context);
                let com = self.propagate(Region::Dlpfc, context)?.activated;
                let goal = sorted(context.iter().chain(&com).copied());
                let action = self.propagate(Region::Ffa, &goal)?.action;
                Ok(ProgramOutput { percepts: com, action, ..Default::default() })
            }
            ProgramCall::DecisionMaking { prospects } => self.decision_making(prospects),
            ProgramCall::BackwardRecitation { items } => self.backward_recitation(items),
            ProgramCall::TemporalProspectiveMemory { command, delay } => self.prospective_memory(*command, *delay),
            ProgramCall::Planning { goal, supplementary, prospects } => {
                let all = sorted(goal.iter().chain(supplementary).copied());
                self.load(Region::Vlpfc, &all);
                self.ungate(Region::Vlpfc, Region::Atl, &all)?;
                let factors = self.propagate(Region::Atl, goal)?.activated;
                let widened: Vec<Prospect> = prospects
                    .iter()
                    .map(|p| Prospect { item: p.item, imagined: sorted(p.imagined.iter().chain(&factors).copied()) })
                    .collect();
                let mut out = self.decision_making(&widened)?;
                out.sequence.insert(0, factors);
                Ok(out)
            }
            ProgramCall::GeneralQuestionSolving { question, reformulations } => {
                self.question_solving(question, reformulations)
            }
            ProgramCall::Addition { .. } => unreachable!("handled by run_program"),
            ProgramCall::ErrorDetection => Err(OpsError::NotImplemented("error_detection")),
            ProgramCall::HabitSuppression => Err(OpsError::NotImplemented("habit_suppression")),
        }
    }

    fn static_imagery(&mut self, percepts: &[PerceptId]) -> Result<(), OpsError> {
        self.load(Region::Vlpfc, percepts);
        self.ungate(Region::Vlpfc, Region::SensoryBuffer, percepts)?;
        Ok(())
    }

    fn dynamic_imagery(&mut self, cue: &[PerceptId]) -> Result<Vec<Vec<PerceptId>>, OpsError> {
        let seq = self.propagate(Region::Hippocampus, cue)?.sequence;
        for ctx in &seq {
            self.ungate(Region::Hippocampus, Region::SensoryBuffer, ctx)?;
        }
        Ok(seq)
    }

    fn rp(
        &mut self,
        observed: &[(PerceptId, u64)],
        now: u64,
        supplementary: &[PerceptId],
    ) -> Result<(Vec<PerceptId>, Vec<PerceptId>), OpsError> {
        let seeds = sorted(observed.iter().map(|o| o.0));
        let all = sorted(seeds.iter().chain(supplementary).copied());
        self.load(Region::Vlpfc, &all);
        self.ungate(Region::Vlpfc, Region::Atl, &all)?;
        let atl = self.propagate(Region::Atl, &seeds)?.activated;
        let tps = self.propagate_timed(observed, now, supplementary)?.activated;
        if !tps.is_empty() {
            self.ungate(Region::Tps, Region::Vlpfc, &tps)?;
        }
        Ok((atl, tps))
    }

    /// Imagery of `percepts`, attended in order and re-perceived as a
    /// temporal sequence.
    fn rt(&mut self, percepts: &[PerceptId]) -> Result<Vec<PerceptId>, OpsError> {
        self.static_imagery(percepts)?;
        self.note("attention", Some(Region::SensoryBuffer), percepts, StepResult::Percepts(percepts.to_vec()));
        Ok(self.propagate(Region::Tps, percepts)?.activated)
    }

    fn rule_internalization(&mut self, store: Region, cue: &[PerceptId], command: PerceptId, expiry: Option<u64>) -> Result<(), OpsError> {
        self.unprotect(store);
        self.load(Region::Vlpfc, cue);
        self.executive.buffer.present_cue(cue.iter().copied().collect());
        self.ungate(Region::Vlpfc, store, cue)?;
        self.protect(store);
        self.load(Region::Vlpfc, &[command]);
        self.executive.buffer.present_command(command)?;
        self.unprotect(store);
        self.ungate(Region::Vlpfc, store, &[command])?;
        let ex = &mut self.executive;
        let target = if store == Region::Rpfc { &mut ex.prospective } else { &mut ex.relations };
        ex.buffer.internalize(target, expiry)?;
        self.note("internalize", Some(store), &[command], StepResult::Percepts(cue.to_vec()));
        self.protect(store);
        Ok(())
    }

    fn decision_making(&mut self, prospects: &[Prospect]) -> Result<ProgramOutput, OpsError> {
        self.unprotect(Region::Dlpfc);
        self.executive.relations.clear()?;
        for p in prospects {
            let view = sorted(std::iter::once(p.item).chain(p.imagined.iter().copied()));
            self.static_imagery(&view)?;
            let r = &self.executive.reward;
            let v = r.predict_value(&ContextKey::of_percepts(view.iter().copied()), &[]) + r.received(&view);
            self.note("evaluate", Some(Region::Vmpfc), &view, StepResult::Value(v));
            self.unprotect(Region::Dlpfc);
            self.ungate(Region::Vlpfc, Region::Dlpfc, &[p.item])?;
            self.executive.relations.store_value(p.item, v)?;
            self.note("store_value", Some(Region::Dlpfc), &[p.item], StepResult::Value(v));
            self.protect(Region::Dlpfc);
        }
        let best = prospects
            .iter()
            .filter_map(|p| self.executive.relations.values().get(&p.item).map(|&v| (p.item, v)))
            .fold(None::<(PerceptId, f64)>, |b, (p, v)| match b {
                Some((bp, bv)) if bv > v || (bv == v && bp <= p) => Some((bp, bv)),
                _ => Some((p, v)),
            });
        let Some((item, value)) = best else {
            return Ok(ProgramOutput::default());
        };
        self.note("select", Some(Region::Dlpfc), &[item], StepResult::Percepts(vec![item]));
        let action = self.propagate(Region::Ffa, &[item])?.action;
        Ok(ProgramOutput { percepts: vec![item], action, value: Some(value), ..Default::default() })
    }

    fn time_cell(&mut self, i: usize) -> PerceptId {
        self.graph.ensure(&format!("T{i}"), Modality::Amodal)
    }

    fn backward_recitation(&mut self, items: &[PerceptId]) -> Result<ProgramOutput, OpsError> {
        let cells: Vec<PerceptId> = (1..=items.len()).map(|i| self.time_cell(i)).collect();
        for (&t, &item) in cells.iter().zip(items) {
            self.rule_internalization(Region::Dlpfc, &[t], item, None)?;
        }
        let mut out = ProgramOutput::default();
        for &t in cells.iter().rev() {
            let got = self.propagate(Region::Dlpfc, &[t])?.activated;
            out.percepts.extend(got.iter().copied());
            out.sequence.push(got);
        }
        Ok(out)
    }

    fn prospective_memory(&mut self, command: PerceptId, delay: u64) -> Result<ProgramOutput, OpsError> {
        let flag = self.graph.ensure(&format!("elapsed {delay}"), Modality::Amodal);
        self.rule_internalization(Region::Rpfc, &[flag], command, None)?;
        let mut out = ProgramOutput::default();
        for k in 0..=delay {
            if k == delay {
                self.abstract_executive.insert(flag);
                self.note("derive", None, &[flag], StepResult::Ok);
            }
            let got = self.propagate(Region::Rpfc, &[])?.activated;
            if !got.is_empty() {
                out.percepts = got;
                out.value = Some(k as f64);
                break;
            }
        }
        self.abstract_executive.remove(&flag);
        Ok(out)
    }

    fn question_solving(&mut self, question: &[PerceptId], reformulations: &[Vec<PerceptId>]) -> Result<ProgramOutput, OpsError> {
        let mut out = ProgramOutput::default();
        for q in std::iter::once(question).chain(reformulations.iter().map(Vec::as_slice)) {
            self.load(Region::Vlpfc, q);
            self.ungate(Region::Vlpfc, Region::Atl, q)?;
            let related = self.propagate(Region::Atl, q)?.activated;
            let cue = sorted(q.iter().chain(&related).copied());
            let recalled = self.propagate(Region::Hippocampus, &cue)?;
            out.sequence.push(related.clone());
            if !recalled.activated.is_empty() {
                let answer: Vec<PerceptId> =
                    recalled.activated.iter().copied().filter(|p| !cue.contains(p)).collect();
                self.ungate(Region::Hippocampus, Region::Dlpfc, &answer)?;
                out.percepts = answer;
                out.sequence.extend(recalled.sequence);
                break;
            }
        }
        Ok(out)
    }
}
