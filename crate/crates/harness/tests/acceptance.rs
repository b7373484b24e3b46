//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Numeric expectations come from brute-force oracles written here, not from
//! the engine.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use cogsim_core::cph::{enumerate_complementary_inputs, CphParams, FiringPattern, NeuronUnit};
use cogsim_core::executive::{
    select_action, Action, Candidate, ConditioningTrial, Executive, ExecutiveParams,
};
use cogsim_core::ops::{Machine, MachineParams, OpsError, ProgramCall, Region, StepResult};
use cogsim_core::semantic::{Modality, SemanticGraph, SemanticParams};
use cogsim_core::temporal::{EpisodicContext, EpisodicParams, EpisodicStore, SpecificityClass};
use cogsim_core::{PerceptId, UnitId};
use cogsim_harness::{collect_scenarios, load_scenario, run_scenario, verify_paths, Run, RunOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn run(name: &str) -> Result<Run, String> {
    let sc = load_scenario(&scenario_dir().join(format!("{name}.json"))).map_err(|e| format!("{name}: {e:#}"))?;
    let r = run_scenario(&sc, &RunOptions::default());
    if let Some(e) = &r.report.error {
        return Err(format!("{name}: {e}"));
    }
    if !r.report.passed {
        let failed: Vec<&str> =
            r.report.assertions.iter().filter(|a| !a.passed).map(|a| a.name.as_str()).collect();
        return Err(format!("{name}: failed assertions {failed:?}"));
    }
    Ok(r)
}

fn result<'a>(r: &'a Run, probe: &str, pointer: &str) -> Result<&'a Value, String> {
    r.report
        .results
        .get(probe)
        .and_then(|v| v.pointer(pointer))
        .ok_or_else(|| format!("{}: no {probe}{pointer}", r.report.scenario))
}

fn labels(v: &Value) -> BTreeSet<String> {
    v.as_array().into_iter().flatten().filter_map(|x| x.as_str().map(str::to_owned)).collect()
}

fn number(v: &Value) -> Result<f64, String> {
    v.as_f64().ok_or_else(|| format!("not a number: {v}"))
}

fn scenario_json(name: &str) -> Result<Value, String> {
    let text = std::fs::read_to_string(scenario_dir().join(format!("{name}.json"))).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn phase_field(sc: &Value, op: &str, field: &str) -> Option<u64> {
    sc["phases"].as_array()?.iter().find(|p| p["op"] == op)?[field].as_u64()
}

fn fp(u: u32, r: u8) -> FiringPattern {
    FiringPattern::new(UnitId(u), r).unwrap()
}

fn power_set(window: &[FiringPattern]) -> BTreeSet<Vec<FiringPattern>> {
    let mut w = window.to_vec();
    w.sort();
    let n = w.len();
    (1u32..(1 << n)).map(|m| (0..n).filter(|i| m & (1 << i) != 0).map(|i| w[i]).collect()).collect()
}

fn cph_enumeration() -> Check {
    let start = Instant::now();
    let (a, b, c, d) = (fp(0, 9), fp(1, 5), fp(2, 6), fp(3, 5));
    let keys = enumerate_complementary_inputs(&[a, b, c, d], None).map_err(|e| e.to_string())?;
    let got: BTreeSet<Vec<FiringPattern>> = keys.iter().map(|k| k.patterns().to_vec()).collect();
    ensure!(keys.len() == 15, "window gave {} subsets", keys.len());
    ensure!(got == power_set(&[a, b, c, d]), "window subsets differ from the power set");
    for listed in [vec![a, b, c, d], vec![a, b], vec![c, d], vec![b, c], vec![a, d], vec![a, c], vec![b, d]] {
        ensure!(got.contains(&listed), "missing {listed:?}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..1000 {
        let n = rng.gen_range(1..=10);
        let mut units: Vec<u32> = (0..40).collect();
        let window: Vec<FiringPattern> = (0..n)
            .map(|_| {
                let u = units.swap_remove(rng.gen_range(0..units.len()));
                fp(u, rng.gen_range(1..=9))
            })
            .collect();
        let out = enumerate_complementary_inputs(&window, None).map_err(|e| e.to_string())?;
        ensure!(out.len() == (1 << n) - 1, "case {case}: |S| = {n} gave {}", out.len());
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(1), "took {took:?}");
    Ok(())
}

fn silencing_halves() -> Check {
    let mut n: NeuronUnit = NeuronUnit::new(UnitId(99), 10.0, CphParams::default());
    let w = [fp(0, 9), fp(1, 9), fp(2, 9), fp(3, 9)];
    n.cph_update(&w, true);
    let q = CphParams::default().eta_plus;
    // every nonempty subset of the full window gets one quantum; silencing a
    // unit keeps only the subsets of the remaining three
    let full = power_set(&w).len() as f64 * q;
    let silenced = power_set(&w[..3]).len() as f64 * q;
    ensure!(n.excitation(&w) == full, "full window {} != {full}", n.excitation(&w));
    ensure!(n.excitation(&w[..3]) == silenced, "silenced {} != {silenced}", n.excitation(&w[..3]));
    ensure!(full == 15.0 * q && silenced == 7.0 * q, "oracle counts {full} {silenced}");
    ensure!(power_set(&w).len() - power_set(&w[..3]).len() == 8, "lost entries");
    Ok(())
}

fn moving_ball() -> Check {
    let sc = scenario_json("moving-ball")?;
    let passes = phase_field(&sc, "vps_invariance", "passes").ok_or("no invariance phase")?;
    ensure!(passes <= 20, "{passes} passes");
    let start = Instant::now();
    let r = run("moving-ball")?;
    let took = start.elapsed();
    ensure!(labels(result(&r, "naive at A", "/fired")?) == BTreeSet::from(["A".to_owned()]), "naive probe");
    ensure!(labels(result(&r, "trained at A", "/fired")?).contains("B"), "trained probe misses B");
    let again = run("moving-ball")?;
    ensure!(r.trace.to_bytes() == again.trace.to_bytes(), "traces differ");
    ensure!(took < Duration::from_secs(1), "took {took:?}");
    Ok(())
}

fn decorrelation() -> Check {
    for name in ["square-circle", "competition"] {
        let sc = scenario_json(name)?;
        ensure!(phase_field(&sc, "vps_correlation", "ticks") == Some(500), "{name}: probe length");
        let r = run(name)?;
        let cross = number(result(&r, "trained correlation", "/groups/cross")?)?;
        let within = number(result(&r, "trained correlation", "/groups/within")?)?;
        ensure!(cross < 0.1, "{name}: cross {cross}");
        ensure!(within > 0.5, "{name}: within {within}");
        if name == "competition" {
            ensure!(result(&r, "M on square", "/fired")? == &Value::Bool(true), "M silent for squares");
            ensure!(result(&r, "M on circle", "/fired")? == &Value::Bool(false), "M fires for circles");
        }
    }
    Ok(())
}

fn prototype() -> Check {
    let mut g = SemanticGraph::new(SemanticParams::default());
    let f: Vec<PerceptId> = ["a", "b", "c", "d"].iter().map(|l| g.ensure(l, Modality::Visual)).collect();
    let bird = g.ensure("bird", Modality::Lexical);
    // birds X, Y, Z
    let obs = [vec![0, 1, 2], vec![0, 1, 3], vec![0, 3]];
    let pairs: Vec<(Vec<PerceptId>, PerceptId)> =
        obs.iter().map(|o| (o.iter().map(|&i| f[i]).collect(), bird)).collect();
    let proto = g.build_prototype(&pairs, 1).map_err(|e| e.to_string())?;
    let oracle = |key: &[usize]| obs.iter().filter(|o| key.iter().all(|k| o.contains(k))).count() as f64;
    for mask in 1u32..16 {
        let key: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
        let ids: Vec<PerceptId> = key.iter().map(|&i| f[i]).collect();
        ensure!(proto.weight(&ids) == oracle(&key), "{key:?}: engine {} oracle {}", proto.weight(&ids), oracle(&key));
    }
    let expect = [(vec![0], 3.0), (vec![1], 2.0), (vec![2], 1.0), (vec![3], 2.0), (vec![0, 1], 2.0), (vec![0, 2], 1.0), (vec![1, 2], 1.0), (vec![0, 3], 2.0), (vec![1, 3], 1.0)];
    for (k, w) in expect {
        ensure!(oracle(&k) == w, "oracle {k:?} = {}", oracle(&k));
    }
    // the printed "D = 1" loses to counting: Y and Z both contain d
    ensure!(oracle(&[3]) == 2.0 && proto.weight(&[f[3]]) == 2.0, "D");
    run("bird-prototype")?;
    Ok(())
}

fn penguin() -> Check {
    let inhibition = ["penguin-direct-inhibition", "penguin-gated-inhibition"];
    for name in ["penguin-weaken-uncorrelated", "penguin-interleaved-replay", "penguin-dilution", inhibition[0], inhibition[1]] {
        let r = run(name)?;
        let before = labels(result(&r, "before penguin", "/retrieved")?);
        ensure!(before.contains("fly") && before.contains("cannot fly"), "{name}: no interference before {before:?}");
        let mynah = labels(result(&r, "after mynah", "/retrieved")?);
        ensure!(mynah.contains("fly") && !mynah.contains("cannot fly"), "{name}: mynah {mynah:?}");
        if inhibition.contains(&name) {
            let p = labels(result(&r, "after penguin", "/retrieved")?);
            ensure!(p.contains("cannot fly") && !p.contains("fly"), "{name}: penguin {p:?}");
        }
    }
    Ok(())
}

fn generalization() -> Check {
    let r = run("dog-cat")?;
    ensure!(labels(result(&r, "with context", "/fired")?) == BTreeSet::from(["scratching a pillow".to_owned()]), "no prediction");
    let hops = result(&r, "with context", "/hops")?.as_array().ok_or("hops")?;
    let has = |step: &str, from: &str, to: &str| {
        hops.iter().any(|h| h["step"] == step && h["from"] == from && h["to"] == to)
    };
    ensure!(has("map", "cat", "dog"), "no cat to dog hop");
    ensure!(has("map", "jumping", "energetic"), "no jumping to energetic hop");
    ensure!(
        hops.iter().any(|h| h["step"] == "match" && labels(&h["fired"]).contains("scratching a pillow")),
        "no temporal match"
    );
    ensure!(labels(result(&r, "without context", "/fired")?).is_empty(), "fires without supplementary percepts");
    Ok(())
}

fn reward_dynamics() -> Check {
    let start = Instant::now();
    let mut g = SemanticGraph::new(SemanticParams::default());
    let bell = g.ensure("bell ringing", Modality::Auditory);
    let sugar = g.ensure("sugar", Modality::Reward);
    let mut ex = Executive::new(ExecutiveParams::default());
    ex.reward.set_received(sugar, 1.0);
    let trial = ConditioningTrial { cue: bell, reward: Some((sugar, 5)), ticks: 10 };
    let mut trials = 0;
    let mut last = Vec::new();
    while trials < 50 {
        last = ex.run_conditioning_trial(&trial, Some(&mut g));
        trials += 1;
        if last[5].delta.abs() < 0.05 {
            break;
        }
    }
    ensure!(last[5].delta.abs() < 0.05, "reward delta {} after {trials} trials", last[5].delta);
    ensure!(last[0].delta > 0.5, "cue delta {}", last[0].delta);
    let mut omit_ex = ex.clone();
    let omitted = omit_ex.run_conditioning_trial(&ConditioningTrial { cue: bell, reward: None, ticks: 10 }, None);
    ensure!(omitted[5].delta <= -0.5, "omission delta {}", omitted[5].delta);
    let late = ex.run_conditioning_trial(&ConditioningTrial { cue: bell, reward: Some((sugar, 8)), ticks: 10 }, None);
    ensure!(late[8].delta > 0.0, "late delivery delta {}", late[8].delta);
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(1), "took {took:?}");
    run("bell-sugar")?;
    run("delayed-omitted-reward")?;
    Ok(())
}

/// Single-digit facts column addition needs, carries included.
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

fn addition() -> Check {
    let r = run("addition")?;
    ensure!(result(&r, "34+73", "/readout")? == "107", "34 + 73 read out {}", result(&r, "34+73", "/readout")?);
    let mut m = Machine::new(MachineParams::default());
    m.install_arithmetic(&[]).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let (a, b) = (rng.gen_range(10..100u64), rng.gen_range(10..100u64));
        let out = m.run_program(&ProgramCall::Addition { a, b }).map_err(|e| format!("{a} + {b}: {e}"))?;
        ensure!(out.readout.as_deref() == Some((a + b).to_string().as_str()), "{a} + {b} read out {:?}", out.readout);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..12 {
        let (a, b) = (rng.gen_range(10..100u64), rng.gen_range(10..100u64));
        let req = required_facts(a, b);
        let gone = req[rng.gen_range(0..req.len())];
        let mut m = Machine::new(MachineParams::default());
        m.install_arithmetic(&[gone]).map_err(|e| e.to_string())?;
        match m.run_program(&ProgramCall::Addition { a, b }) {
            Err(OpsError::ProgramFailed { completed, .. }) => {
                let last = completed.iter().rev().find(|s| s.region == Some(Region::Tps)).ok_or("no fact lookup")?;
                ensure!(last.result == StepResult::Percepts(vec![]), "{a} + {b} without {gone:?}: {:?}", last.result);
            }
            other => return Err(format!("{a} + {b} without {gone:?}: {other:?}")),
        }
    }
    Ok(())
}

fn episodic() -> Check {
    use SpecificityClass::*;
    let params = EpisodicParams::default();
    let classes = [Sensory, Object, Scene, Concept, Event];
    let contexts: Vec<EpisodicContext> = (0..10u32)
        .map(|i| EpisodicContext {
            tick: u64::from(i) + 1,
            percepts: (0..5u32).map(|k| (PerceptId(i * 10 + k), classes[k as usize])).collect(),
        })
        .collect();
    let mut s = EpisodicStore::new(params);
    let id = s.store(contexts.clone(), 0, false).map_err(|e| e.to_string())?;
    let cue = [PerceptId(30), PerceptId(31), PerceptId(32)];
    let r = s.recall(&cue, 3).map_err(|e| e.to_string())?.ok_or("no recall")?;
    let replay: Vec<EpisodicContext> = r.replay.collect();
    ensure!(replay == contexts[3..], "replay is not contexts 4..10 in order");
    let salient = s.store(contexts.clone(), 0, true).map_err(|e| e.to_string())?;
    // just past the sensory lifetime and well inside every other one
    let age = params.lifetime(Sensory) + 1;
    ensure!(classes[1..].iter().all(|&c| params.lifetime(c) > age), "lifetimes overlap");
    s.degrade_traces(age);
    let aged = s.get(id).ok_or("trace gone")?;
    for (c, orig) in aged.contexts.iter().zip(&contexts) {
        let expect: Vec<_> = orig.percepts.iter().filter(|(_, &cl)| cl != Sensory).collect();
        ensure!(c.percepts.iter().collect::<Vec<_>>() == expect, "context {} after ageing", c.tick);
    }
    ensure!(s.get(salient).ok_or("salient gone")?.contexts == contexts, "salient trace degraded");
    run("episodic-beach")?;
    Ok(())
}

fn random_candidates(rng: &mut ChaCha8Rng) -> Vec<Candidate> {
    (0..rng.gen_range(1..12))
        .map(|i| {
            let p = rng.gen_range(0.01..100.0);
            Candidate { action: format!("a{i:02}").as_str().into(), external: rng.gen_bool(0.7), score: p, priority: p }
        })
        .collect()
}

fn rules_and_selection() -> Check {
    let mut m = Machine::new(MachineParams::default());
    let flicker = m.graph.ensure("light flicker", Modality::Visual);
    let press = m.graph.ensure("press button", Modality::Motor);
    let stop = m.graph.ensure("do not move!", Modality::Auditory);
    m.executive.suppressors.insert(stop);
    m.executive.ffa.register(Action::external("press", "finger")).map_err(|e| e.to_string())?;
    m.executive.ffa.associate(&[press], &"press".into(), 1).map_err(|e| e.to_string())?;
    let rule = ProgramCall::RuleInternalization { cue: vec![flicker], command: press, expiry: None };
    m.run_program(&rule).map_err(|e| e.to_string())?;
    let out = m.run_program(&ProgramCall::RuleActivation { context: vec![flicker] }).map_err(|e| e.to_string())?;
    ensure!(out.action.as_ref().is_some_and(|a| a.0 == "press"), "action {:?}", out.action);
    let cue = out.steps.iter().find(|s| s.primitive == "load").ok_or("no load")?.tick;
    let emit = out.steps.iter().find(|s| s.region == Some(Region::Dlpfc)).ok_or("no emission")?.tick;
    ensure!(emit - cue <= 1, "emitted {} ticks after the cue", emit - cue);
    let held = m.run_program(&ProgramCall::RuleActivation { context: vec![flicker, stop] }).map_err(|e| e.to_string())?;
    ensure!(held.action.is_none(), "press emitted under do not move");
    run("flicker-press")?;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..100 {
        let c = random_candidates(&mut rng);
        if let Some(x) = select_action(&c, true) {
            ensure!(!x.external, "case {case}: external {:?} under suppression", x.action);
        }
        let k = rng.gen_range(0.01..1000.0);
        let scaled: Vec<Candidate> = c.iter().cloned().map(|mut x| { x.priority *= k; x }).collect();
        let (a, b) = (select_action(&c, false).map(|x| x.action), select_action(&scaled, false).map(|x| x.action));
        ensure!(a == b, "case {case}: scaling by {k} changed {a:?} to {b:?}");
    }
    Ok(())
}

fn determinism() -> Check {
    let start = Instant::now();
    let paths = collect_scenarios(&[scenario_dir()]).map_err(|e| e.to_string())?;
    ensure!(!paths.is_empty(), "empty corpus");
    let first = verify_paths(&paths, &RunOptions::default());
    let second = verify_paths(&paths, &RunOptions::default());
    let took = start.elapsed();
    for (a, b) in first.iter().zip(&second) {
        let name = a.path.display();
        ensure!(a.passed() && b.passed(), "{name} failed");
        let (ra, rb) = (a.outcome.as_ref().unwrap(), b.outcome.as_ref().unwrap());
        ensure!(ra.trace.to_bytes() == rb.trace.to_bytes(), "{name}: traces differ");
    }
    ensure!(took < Duration::from_secs(30), "corpus took {took:?}");
    Ok(())
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("cph enumeration", cph_enumeration),
        ("silencing one of four units", silencing_halves),
        ("moving-ball invariance", moving_ball),
        ("decorrelation and competition", decorrelation),
        ("prototype co-occurrence", prototype),
        ("penguin protocols", penguin),
        ("cat-jumping generalization", generalization),
        ("reward dynamics", reward_dynamics),
        ("column addition", addition),
        ("episodic replay and ageing", episodic),
        ("rules and action selection", rules_and_selection),
        ("corpus determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(()) => println!("criterion {:2}: PASS  {title}", i + 1),
            Err(e) => {
                failed += 1;
                println!("criterion {:2}: FAIL  {title}: {e}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
