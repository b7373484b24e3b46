use cogsim_core::vps::{
    FeatureStimulus, Hierarchy, MovingObjectProtocol, Rect, ShapeCell, ShapeTemplate, VpsParams,
};
use cogsim_core::UnitId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn shape(cells: &[(i64, i64, &str)]) -> ShapeTemplate {
    ShapeTemplate {
        cells: cells
            .iter()
            .map(|&(dx, dy, f)| ShapeCell { dx, dy, feature: f.into(), rate: 9 })
            .collect(),
    }
}

fn ball() -> ShapeTemplate {
    shape(&[(0, 0, "ball"), (1, 0, "ball"), (0, 1, "ball"), (1, 1, "ball")])
}

fn moving_ball() -> (Hierarchy, UnitId, UnitId) {
    let mut h = Hierarchy::new(8, 2, VpsParams::default());
    let a = h.add_unit("A", 0, Rect { x: 0, y: 0, w: 6, h: 2 }, 10.0).unwrap();
    let b = h.add_unit("B", 0, Rect { x: 2, y: 0, w: 6, h: 2 }, 10.0).unwrap();
    h.tune(a, &ball().render(8, 2, 2, 0).unwrap(), 1).unwrap();
    h.tune(b, &ball().render(8, 2, 4, 0).unwrap(), 1).unwrap();
    (h, a, b)
}

fn one_pass() -> MovingObjectProtocol {
    MovingObjectProtocol { shape: ball(), trajectory: vec![(2, 0), (4, 0)], passes: 1, gap_ticks: 1 }
}

#[test]
fn moving_ball_binds_positions() {
    let (mut h, a, b) = moving_ball();
    let at_a = ball().render(8, 2, 2, 0).unwrap();
    assert_eq!(h.probe(&at_a).unwrap(), BTreeSet::from([a]));
    let mut first = None;
    for pass in 1..=20 {
        h.run_invariance_protocol(&one_pass()).unwrap();
        if first.is_none() && h.probe(&at_a).unwrap().contains(&b) {
            first = Some(pass);
        }
    }
    // a→b gains 1 per pass; θ_bidir = 5
    assert_eq!(first, Some(5));
    let asm = h.assemblies();
    assert_eq!(asm[0].members, BTreeSet::from([a, b]));
    // B now responds to the position-A pattern through its own store
    let win = h.present(&at_a).unwrap().windows[&b].clone();
    assert!(h.unit(b).neuron.excitation(&win) >= 10.0);
}

#[test]
fn zero_passes_no_assembly() {
    let (mut h, _, _) = moving_ball();
    let proto = MovingObjectProtocol { passes: 0, ..one_pass() };
    assert!(h.run_invariance_protocol(&proto).unwrap().assembly.is_none());
}

const SQUARE: [(i64, i64, &str); 4] = [(0, 0, "straight"), (1, 0, "straight"), (0, 1, "straight"), (1, 1, "straight")];
const CIRCLE: [(i64, i64, &str); 4] = [(0, 2, "curve"), (1, 2, "curve"), (0, 3, "curve"), (1, 3, "curve")];

fn mixed() -> ShapeTemplate {
    shape(&[SQUARE[0], SQUARE[1], SQUARE[2], CIRCLE[0], CIRCLE[1], CIRCLE[2]])
}

struct Competition {
    h: Hierarchy,
    sq: Vec<UnitId>,
    ci: Vec<UnitId>,
    m: UnitId,
}

fn competition() -> Competition {
    let params = VpsParams { homeostasis_interval: 1, ..VpsParams::default() };
    let mut h = Hierarchy::new(2, 4, params);
    let rf = Rect { x: 0, y: 0, w: 2, h: 4 };
    let sq_stim = shape(&SQUARE).render(2, 4, 0, 0).unwrap();
    let ci_stim = shape(&CIRCLE).render(2, 4, 0, 0).unwrap();
    let sq: Vec<_> = ["S1", "S2"].iter().map(|n| h.add_unit(n, 0, rf, 7.0).unwrap()).collect();
    let ci: Vec<_> = ["C1", "C2"].iter().map(|n| h.add_unit(n, 0, rf, 7.0).unwrap()).collect();
    let m = h.add_unit("M", 0, rf, 12.0).unwrap();
    for &u in &sq {
        h.tune(u, &sq_stim, 1).unwrap();
        h.unit_mut(u).neuron.homeostatic_target = 15.0;
    }
    for &u in &ci {
        h.tune(u, &ci_stim, 1).unwrap();
        h.unit_mut(u).neuron.homeostatic_target = 15.0;
    }
    h.tune(m, &ci_stim, 2).unwrap();
    h.tune(m, &sq_stim, 1).unwrap();
    h.unit_mut(m).neuron.homeostatic_target = 45.0;
    for &s in &sq {
        for &c in ci.iter().chain([&m]) {
            h.set_inhibitory(s, c, 0.0).unwrap();
            if c != m {
                h.set_inhibitory(c, s, 0.0).unwrap();
            }
        }
    }
    for &c in &ci {
        h.set_inhibitory(c, m, 0.0).unwrap();
    }
    Competition { h, sq, ci, m }
}

fn pearson(x: &[bool], y: &[bool]) -> f64 {
    let n = x.len() as f64;
    let f = |b: &bool| if *b { 1.0 } else { 0.0 };
    let mx = x.iter().map(f).sum::<f64>() / n;
    let my = y.iter().map(f).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (f(a) - mx, f(b) - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

fn probe_stream(c: &mut Competition, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stims = [
        FeatureStimulus::blank(2, 4),
        shape(&SQUARE).render(2, 4, 0, 0).unwrap(),
        shape(&CIRCLE).render(2, 4, 0, 0).unwrap(),
        mixed().render(2, 4, 0, 0).unwrap(),
    ];
    let units: Vec<UnitId> = c.sq.iter().chain(&c.ci).copied().collect();
    let mut series = vec![Vec::new(); units.len()];
    for _ in 0..500 {
        let r: f64 = rng.gen();
        let k = if r < 0.3 { 0 } else if r < 0.5 { 1 } else if r < 0.7 { 2 } else { 3 };
        let fired = c.h.probe(&stims[k]).unwrap();
        for (i, u) in units.iter().enumerate() {
            series[i].push(fired.contains(u));
        }
    }
    let cross = [(0, 2), (0, 3), (1, 2), (1, 3)].iter().map(|&(i, j)| pearson(&series[i], &series[j])).sum::<f64>() / 4.0;
    let within = (pearson(&series[0], &series[1]) + pearson(&series[2], &series[3])) / 2.0;
    (cross, within)
}

fn train(c: &mut Competition, cycles: usize) {
    let blank = FeatureStimulus::blank(2, 4);
    let sq = shape(&SQUARE).render(2, 4, 0, 0).unwrap();
    let ci = shape(&CIRCLE).render(2, 4, 0, 0).unwrap();
    for _ in 0..cycles {
        for s in [&sq, &sq, &sq, &ci] {
            c.h.step(s).unwrap();
            c.h.step(&blank).unwrap();
        }
    }
}

#[test]
fn decorrelation_and_competition() {
    let mut c = competition();
    let (cross0, _) = probe_stream(&mut c, 7);
    assert!(cross0 > 0.1, "untrained cross correlation {cross0}");
    let sq = shape(&SQUARE).render(2, 4, 0, 0).unwrap();
    let ci = shape(&CIRCLE).render(2, 4, 0, 0).unwrap();
    assert!(c.h.probe(&ci).unwrap().contains(&c.m));
    train(&mut c, 10);
    let (cross, within) = probe_stream(&mut c, 7);
    assert!(cross < 0.1 && within > 0.5, "cross {cross} within {within}");
    assert!(cross < within);
    let m = c.m;
    let ex_sq = c.h.present(&sq).unwrap().excitation[&m];
    let ex_ci = c.h.present(&ci).unwrap().excitation[&m];
    assert!(ex_sq > ex_ci, "{ex_sq} vs {ex_ci}");
    assert!(c.h.probe(&sq).unwrap().contains(&m));
    assert!(!c.h.probe(&ci).unwrap().contains(&m));
    assert!(c.h.inhibitory_weight(c.sq[0], c.ci[0]) > 0.0);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn line(n: usize) -> (Hierarchy, Vec<UnitId>) {
        let mut h = Hierarchy::new(n, 1, VpsParams::default());
        let ids = (0..n)
            .map(|i| h.add_unit(&format!("u{i}"), 0, Rect { x: i, y: 0, w: 1, h: 1 }, 1.0).unwrap())
            .collect();
        (h, ids)
    }

    proptest! {
        #[test]
        fn inhibitory_monotone_by_trial_kind(start in 0.0f64..20.0, trials in proptest::collection::vec(any::<bool>(), 1..40)) {
            let (mut h, ids) = line(2);
            h.set_inhibitory(ids[0], ids[1], start).unwrap();
            for post_fired in trials {
                let before = h.inhibitory_weight(ids[0], ids[1]);
                let after = h.inhibitory_update(ids[0], ids[1], post_fired).unwrap();
                if post_fired {
                    prop_assert!(after <= before);
                } else {
                    prop_assert!(after >= before);
                }
                prop_assert!(after >= 0.0);
            }
        }

        #[test]
        fn lateral_closure_idempotent(
            edges in proptest::collection::vec((0usize..6, 0usize..6, 0.0f64..10.0), 0..20),
            seed in proptest::collection::btree_set(0usize..6, 0..4),
        ) {
            let (mut h, ids) = line(6);
            for (a, b, w) in edges {
                if a != b {
                    h.set_lateral(ids[a], ids[b], w).unwrap();
                }
            }
            let start: BTreeSet<UnitId> = seed.into_iter().map(|i| ids[i]).collect();
            let once = h.lateral_closure(&start);
            prop_assert!(once.is_superset(&start));
            prop_assert_eq!(h.lateral_closure(&once), once);
        }

        #[test]
        fn assemblies_are_bidirectional_cliques(
            edges in proptest::collection::vec((0usize..5, 0usize..5, 0.0f64..10.0), 0..25),
        ) {
            let (mut h, ids) = line(5);
            for (a, b, w) in edges {
                if a != b {
                    h.set_lateral(ids[a], ids[b], w).unwrap();
                }
            }
            for asm in h.assemblies() {
                prop_assert!(asm.members.len() >= 2);
                for &a in &asm.members {
                    for &b in &asm.members {
                        if a != b {
                            prop_assert!(h.lateral_weight(a, b) >= h.params.theta_bidir);
                        }
                    }
                }
            }
        }
    }
}
