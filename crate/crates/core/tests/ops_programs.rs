use std::collections::BTreeMap;

use cogsim_core::executive::{Action, ContextKey};
use cogsim_core::ops::{Machine, MachineParams, OpsError, ProgramCall, Prospect, Region, StepResult};
use cogsim_core::semantic::Modality;
use cogsim_core::temporal::{EpisodicContext, SpecificityClass};
use cogsim_core::PerceptId;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn arithmetic_machine(withheld: &[(u8, u8)]) -> Machine {
    let mut m = Machine::new(MachineParams::default());
    m.install_arithmetic(withheld).unwrap();
    m
}

#[test]
fn thirty_four_plus_seventy_three() {
    let mut m = arithmetic_machine(&[]);
    let out = m.run_program(&ProgramCall::Addition { a: 34, b: 73 }).unwrap();
    assert_eq!(out.readout.as_deref(), Some("107"));
    let fired: Vec<Vec<String>> = out
        .steps
        .iter()
        .filter(|s| s.region == Some(Region::Tps))
        .map(|s| match &s.result {
            StepResult::Percepts(p) => p.iter().map(|&x| m.graph.label(x).to_owned()).collect(),
            _ => vec![],
        })
        .collect();
    assert_eq!(fired, vec![vec!["7".to_owned()], vec!["10".to_owned()]]);
    assert!(out.steps.iter().any(|s| s.region == Some(Region::Ffa)
        && matches!(&s.result, StepResult::Action(Some(a)) if a.0 == "carry")));
}

#[test]
fn two_hundred_seeded_pairs_match_integer_addition() {
    let mut m = arithmetic_machine(&[]);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let (a, b) = (rng.gen_range(10..100u64), rng.gen_range(10..100u64));
        let out = m.run_program(&ProgramCall::Addition { a, b }).unwrap();
        assert_eq!(out.readout.unwrap(), (a + b).to_string(), "{a} + {b}");
    }
}

fn required_facts(a: u64, b: u64) -> Vec<(u8, u8)> {
    let (mut a, mut b, mut carry, mut out) = (a, b, false, Vec::new());
    while a > 0 || b > 0 {
        let (x, y) = ((a % 10) as u8, (b % 10) as u8);
        out.push((x, y));
        let mut s = x + y;
        if carry {
            out.push((s % 10, 1));
            s += 1;
        }
        carry = s >= 10;
        a /= 10;
        b /= 10;
    }
    out
}

#[test]
fn withheld_fact_never_fires() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..12 {
        let (a, b) = (rng.gen_range(10..100u64), rng.gen_range(10..100u64));
        let req = required_facts(a, b);
        let gone = req[rng.gen_range(0..req.len())];
        let mut m = arithmetic_machine(&[gone]);
        let err = m.run_program(&ProgramCall::Addition { a, b }).unwrap_err();
        let OpsError::ProgramFailed { completed, reason, .. } = err else { panic!("{err:?}") };
        assert!(reason.contains("no fact fired"), "{reason}");
        let last_tps = completed.iter().rev().find(|s| s.region == Some(Region::Tps)).unwrap();
        assert_eq!(last_tps.result, StepResult::Percepts(vec![]));
        let (x, y) = (m.arithmetic.as_ref().unwrap().digits[gone.0 as usize], m.arithmetic.as_ref().unwrap().digits[gone.1 as usize]);
        assert_eq!(last_tps.operands[0], x);
        assert_eq!(last_tps.operands[2], y);
    }
}

fn flicker_machine() -> (Machine, PerceptId, PerceptId, PerceptId) {
    let mut m = Machine::new(MachineParams::default());
    let flicker = m.graph.ensure("light flicker", Modality::Visual);
    let steady = m.graph.ensure("light steady", Modality::Visual);
    let press = m.graph.ensure("press button", Modality::Motor);
    m.executive.ffa.register(Action::external("press", "finger")).unwrap();
    m.executive.ffa.associate(&[press], &"press".into(), 1).unwrap();
    (m, flicker, steady, press)
}

#[test]
fn rule_internalization_then_activation() {
    let (mut m, flicker, steady, press) = flicker_machine();
    m.run_program(&ProgramCall::RuleInternalization { cue: vec![flicker], command: press, expiry: None }).unwrap();
    let out = m.run_program(&ProgramCall::RuleActivation { context: vec![flicker] }).unwrap();
    assert_eq!(out.percepts, vec![press]);
    assert_eq!(out.action.unwrap().0, "press");
    let cue_tick = out.steps.iter().find(|s| s.primitive == "load").unwrap().tick;
    let emit_tick = out.steps.iter().find(|s| s.region == Some(Region::Dlpfc)).unwrap().tick;
    assert!(emit_tick - cue_tick <= 1);
    let none = m.run_program(&ProgramCall::RuleActivation { context: vec![steady] }).unwrap();
    assert!(none.percepts.is_empty());
}

#[test]
fn do_not_move_suppresses_the_press() {
    let (mut m, flicker, _, press) = flicker_machine();
    let stop = m.graph.ensure("do not move!", Modality::Auditory);
    m.executive.suppressors.insert(stop);
    m.run_program(&ProgramCall::RuleInternalization { cue: vec![flicker], command: press, expiry: None }).unwrap();
    let out = m.run_program(&ProgramCall::RuleActivation { context: vec![flicker, stop] }).unwrap();
    assert_eq!(out.percepts, vec![press]);
    assert!(out.action.is_none());
}

#[test]
fn backward_recitation_reverses() {
    let mut m = Machine::new(MachineParams::default());
    let items: Vec<PerceptId> = ["seven", "two", "nine"].iter().map(|l| m.graph.ensure(l, Modality::Auditory)).collect();
    let out = m.run_program(&ProgramCall::BackwardRecitation { items: items.clone() }).unwrap();
    let mut rev = items.clone();
    rev.reverse();
    assert_eq!(out.percepts, rev);
}

#[test]
fn prospective_memory_waits_for_the_flag() {
    let mut m = Machine::new(MachineParams::default());
    let call = m.graph.ensure("call mum", Modality::Lexical);
    let out = m.run_program(&ProgramCall::TemporalProspectiveMemory { command: call, delay: 4 }).unwrap();
    assert_eq!(out.percepts, vec![call]);
    assert_eq!(out.value, Some(4.0));
}

#[test]
fn stubs_are_explicit() {
    let mut m = Machine::new(MachineParams::default());
    assert_eq!(m.run_program(&ProgramCall::ErrorDetection), Err(OpsError::NotImplemented("error_detection")));
    assert_eq!(m.run_program(&ProgramCall::HabitSuppression), Err(OpsError::NotImplemented("habit_suppression")));
}

#[test]
fn dynamic_imagery_replays_episode() {
    let mut m = Machine::new(MachineParams::default());
    let ps: Vec<PerceptId> = (0..4).map(|i| m.graph.ensure(&format!("scene {i}"), Modality::Visual)).collect();
    let ctxs = ps
        .iter()
        .enumerate()
        .map(|(i, &p)| EpisodicContext { tick: i as u64, percepts: [(p, SpecificityClass::Event)].into_iter().collect() })
        .collect();
    m.episodic.store(ctxs, 0, false).unwrap();
    let out = m.run_program(&ProgramCall::DynamicImagery { cue: vec![ps[1]] }).unwrap();
    assert_eq!(out.sequence, vec![vec![ps[1]], vec![ps[2]], vec![ps[3]]]);
    assert_eq!(m.contents(Region::SensoryBuffer), vec![ps[3]]);
}

fn menu(values: &[f64]) -> (Machine, Vec<PerceptId>) {
    let mut m = Machine::new(MachineParams::default());
    let items: Vec<PerceptId> =
        (0..values.len()).map(|i| m.graph.ensure(&format!("dish {i}"), Modality::Visual)).collect();
    for (&p, &v) in items.iter().zip(values) {
        m.executive.reward.set_value(ContextKey::of_percepts([p]), v);
    }
    (m, items)
}

fn decide(values: &[f64]) -> PerceptId {
    let (mut m, items) = menu(values);
    let prospects = items.iter().map(|&item| Prospect { item, imagined: vec![] }).collect();
    m.run_program(&ProgramCall::DecisionMaking { prospects }).unwrap().percepts[0]
}

/// Region contents must not change while a region is protected.
fn assert_protection_holds(m: &Machine) {
    let mut locked: BTreeMap<Region, u64> = BTreeMap::new();
    let mut intervals = Vec::new();
    for s in m.log() {
        match (s.primitive.as_str(), s.region) {
            ("protect", Some(r)) => {
                locked.entry(r).or_insert(s.tick);
            }
            ("unprotect", Some(r)) => {
                if let Some(t0) = locked.remove(&r) {
                    intervals.push((r, t0, s.tick));
                }
            }
            _ => {}
        }
    }
    let end = m.tick;
    intervals.extend(locked.into_iter().map(|(r, t0)| (r, t0, end)));
    for (r, t0, t1) in intervals {
        assert!(
            !m.writes().iter().any(|w| w.region == r && w.tick > t0 && w.tick < t1),
            "{r} written while protected between {t0} and {t1}"
        );
    }
}

#[test]
fn protection_contract_over_program_traces() {
    let (mut m, flicker, steady, press) = flicker_machine();
    let items: Vec<PerceptId> = ["a", "b", "c"].iter().map(|l| m.graph.ensure(l, Modality::Lexical)).collect();
    m.run_program(&ProgramCall::RuleInternalization { cue: vec![flicker], command: press, expiry: None }).unwrap();
    m.run_program(&ProgramCall::BackwardRecitation { items: items.clone() }).unwrap();
    m.run_program(&ProgramCall::RuleActivation { context: vec![steady] }).unwrap();
    // Writes to a protected region are refused.
    m.protect(Region::Dlpfc);
    m.load(Region::Vlpfc, &[steady]);
    assert_eq!(m.ungate(Region::Vlpfc, Region::Dlpfc, &[steady]).unwrap(), cogsim_core::ops::UngateOutcome::Blocked);
    let prospects = items.iter().map(|&item| Prospect { item, imagined: vec![] }).collect();
    m.run_program(&ProgramCall::DecisionMaking { prospects }).unwrap();
    assert_protection_holds(&m);
}

#[test]
fn programs_are_deterministic() {
    let run = || {
        let mut m = arithmetic_machine(&[]);
        m.run_program(&ProgramCall::Addition { a: 58, b: 67 }).unwrap();
        let items = vec![m.arithmetic.as_ref().unwrap().digits[3], m.arithmetic.as_ref().unwrap().digits[8]];
        m.run_program(&ProgramCall::BackwardRecitation { items }).unwrap();
        format!("{:?}", m.log())
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decision_is_argmax_and_scale_invariant(values in prop::collection::vec(0.0f64..10.0, 1..6), k in 0.01f64..100.0) {
        let (_, items) = menu(&values);
        let best = values.iter().enumerate().fold(0, |b, (i, v)| if *v > values[b] { i } else { b });
        prop_assert_eq!(decide(&values), items[best]);
        let scaled: Vec<f64> = values.iter().map(|v| v * k).collect();
        prop_assert_eq!(decide(&scaled), items[best]);
    }
}
