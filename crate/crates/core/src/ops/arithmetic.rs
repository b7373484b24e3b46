use serde::Serialize;
use std::collections::BTreeMap;

use super::{Machine, OpsError, Region, StepResult};
use crate::executive::{Action, ActionId, InternalOp};
use crate::semantic::{Modality, ReplayDirection};
use crate::temporal::TemporalSequence;
use crate::PerceptId;

/// Excitation a digit fact needs before its sum fires: just over half of
/// the 127 subsets of a fully matched `a, +, b` episode.
pub const FACT_THRESHOLD: f64 = 64.0;

/// Percepts and actions used by column addition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Arithmetic {
    pub digits: [PerceptId; 10],
    pub plus: PerceptId,
    /// `sums[n]` is the percept for the number n, 0..=18.
    pub sums: Vec<PerceptId>,
    pub exceeds_ten: PerceptId,
    pub carry_pending: PerceptId,
    pub columns_done: PerceptId,
    pub carry: ActionId,
    pub bring_down: ActionId,
    /// Facts `(a, b)` consolidated as temporal sequences.
    pub facts: Vec<(u8, u8)>,
}

/// Labels and modalities that [`Machine::install_arithmetic`] registers.
pub fn arithmetic_percepts() -> Vec<(String, Modality)> {
    let mut v: Vec<(String, Modality)> = (0..=18).map(|n| (n.to_string(), Modality::Visual)).collect();
    v.push(("+".into(), Modality::Visual));
    for l in ["exceeds ten", "carry pending", "columns done"] {
        v.push((l.into(), Modality::Amodal));
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArithmeticReport {
    pub readout: String,
    pub digits: Vec<PerceptId>,
    pub carries: usize,
}

impl Machine {
    /// Registers digit percepts and consolidates every single-digit fact
    /// `a + b` not listed in `withheld`. Sums of ten or more are linked to an
    /// "exceeds ten" concept that drives the carry action.
    pub fn install_arithmetic(&mut self, withheld: &[(u8, u8)]) -> Result<&Arithmetic, OpsError> {
        let g = &mut self.graph;
        let digits: [PerceptId; 10] = std::array::from_fn(|d| g.ensure(&d.to_string(), Modality::Visual));
        let plus = g.ensure("+", Modality::Visual);
        let mut sums = digits.to_vec();
        sums.extend((10..=18).map(|n| g.ensure(&n.to_string(), Modality::Visual)));
        let exceeds_ten = g.ensure("exceeds ten", Modality::Amodal);
        let carry_pending = g.ensure("carry pending", Modality::Amodal);
        let columns_done = g.ensure("columns done", Modality::Amodal);
        for &s in &sums[10..] {
            g.consolidate_replay(&[vec![s], vec![exceeds_ten]], ReplayDirection::Forward, 5)?;
        }
        for (n, &p) in sums.iter().enumerate() {
            let r = if n < 10 { vec![p] } else { vec![digits[1], digits[n - 10]] };
            self.imagery.insert(p, r);
        }
        let mut facts = Vec::new();
        for a in 0..10u8 {
            for b in 0..10u8 {
                if withheld.contains(&(a, b)) {
                    continue;
                }
                let target = sums[(a + b) as usize];
                self.consolidate_fact(digits[a as usize], plus, digits[b as usize], target)?;
                facts.push((a, b));
            }
        }
        let carry: ActionId = "carry".into();
        let bring_down: ActionId = "bring down".into();
        let ffa = &mut self.executive.ffa;
        if ffa.action(&carry).is_none() {
            ffa.register(Action::internal("carry", InternalOp::Imagery, None, vec![digits[1]]))?;
            ffa.associate(&[exceeds_ten], &carry, 1)?;
        }
        if ffa.action(&bring_down).is_none() {
            ffa.register(Action::internal("bring down", InternalOp::Imagery, None, vec![digits[1]]))?;
            ffa.associate(&[carry_pending, columns_done], &bring_down, 1)?;
        }
        self.arithmetic = Some(Arithmetic {
            digits,
            plus,
            sums,
            exceeds_ten,
            carry_pending,
            columns_done,
            carry,
            bring_down,
            facts,
        });
        Ok(self.arithmetic.as_ref().expect("just set"))
    }

    /// `a` at tick 0, `+` at 1, `b` at 2, predicting `sum` at 3.
    pub fn consolidate_fact(&mut self, a: PerceptId, plus: PerceptId, b: PerceptId, sum: PerceptId) -> Result<TemporalSequence, OpsError> {
        let seq = self.temporal.consolidate_temporal_sequence(&[(a, 0), (plus, 1), (b, 2)], sum, 3, &[], 1)?;
        self.temporal.set_threshold(sum, FACT_THRESHOLD);
        Ok(seq)
    }

    /// Column addition on imagery: attend each column right to left, match
    /// the fact, write the units digit, carry through the action network,
    /// then read the answer row left to right.
    pub fn add(&mut self, a: u64, b: u64) -> Result<ArithmeticReport, OpsError> {
        let ar = self.arithmetic.clone().ok_or(OpsError::NoArithmetic)?;
        let da = decimal(a);
        let db = decimal(b);
        let n = da.len().max(db.len());
        let pad = |v: &[u8]| -> Vec<PerceptId> {
            let mut out = vec![ar.digits[0]; n - v.len()];
            out.extend(v.iter().map(|&d| ar.digits[d as usize]));
            out
        };
        let (ra, rb) = (pad(&da), pad(&db));
        let start = self.begin("addition");
        let res = self.add_columns(&ar, &ra, &rb);
        let out = res.map_err(|(step, reason)| OpsError::ProgramFailed {
            program: "addition".into(),
            step,
            reason,
            completed: self.log()[start..].to_vec(),
        });
        self.end();
        out
    }

    fn add_columns(&mut self, ar: &Arithmetic, ra: &[PerceptId], rb: &[PerceptId]) -> Result<ArithmeticReport, (usize, String)> {
        let fail = |m: &Machine, why: String| (m.current_step(), why);
        let n = ra.len() as i64;
        let mut problem: Vec<PerceptId> = ra.iter().chain(rb).copied().collect();
        problem.push(ar.plus);
        problem.sort();
        problem.dedup();
        self.load(Region::Vlpfc, &problem);
        self.ungate(Region::Vlpfc, Region::SensoryBuffer, &problem).map_err(|e| fail(self, e.to_string()))?;

        let mut carry_row: BTreeMap<i64, PerceptId> = BTreeMap::new();
        let mut answer: BTreeMap<i64, PerceptId> = BTreeMap::new();
        let mut carries = 0;
        for col in (0..n).rev() {
            let (x, y) = (ra[col as usize], rb[col as usize]);
            let s = self.match_fact(ar, x, y).map_err(|why| fail(self, why))?;
            let mut render = self.imagery[&s].clone();
            let mut wide = s;
            if carry_row.contains_key(&col) {
                let units = *render.last().expect("rendered");
                let s2 = self.match_fact(ar, units, ar.digits[1]).map_err(|why| fail(self, why))?;
                if render.len() == 1 {
                    render = self.imagery[&s2].clone();
                    wide = s2;
                } else {
                    *render.last_mut().expect("rendered") = s2;
                }
            }
            let units = *render.last().expect("rendered");
            answer.insert(col, units);
            self.note("imagery", Some(Region::SensoryBuffer), &[units], StepResult::Ok);
            if render.len() > 1 {
                let concept = self.propagate(Region::Atl, &[wide]).map_err(|e| fail(self, e.to_string()))?;
                if !concept.activated.contains(&ar.exceeds_ten) {
                    return Err(fail(self, "two-digit column sum not recognised".into()));
                }
                let act = self.propagate(Region::Ffa, &[ar.exceeds_ten]).map_err(|e| fail(self, e.to_string()))?;
                if act.action.as_ref() != Some(&ar.carry) {
                    return Err(fail(self, "carry action not selected".into()));
                }
                let one = self.executive.ffa.action(&ar.carry).expect("registered").payload[0];
                carry_row.insert(col - 1, one);
                carries += 1;
                self.note("imagery", Some(Region::SensoryBuffer), &[one], StepResult::Ok);
            }
        }
        self.abstract_executive.insert(ar.columns_done);
        if let Some(&one) = carry_row.get(&-1) {
            self.abstract_executive.insert(ar.carry_pending);
            let act = self.propagate(Region::Ffa, &[ar.carry_pending, ar.columns_done]).map_err(|e| fail(self, e.to_string()))?;
            if act.action.as_ref() != Some(&ar.bring_down) {
                return Err(fail(self, "bring-down action not selected".into()));
            }
            answer.insert(-1, one);
            self.note("imagery", Some(Region::SensoryBuffer), &[one], StepResult::Ok);
        }
        self.abstract_executive.remove(&ar.carry_pending);
        self.abstract_executive.remove(&ar.columns_done);

        let mut digits: Vec<PerceptId> = answer.into_values().collect();
        while digits.len() > 1 && digits[0] == ar.digits[0] {
            digits.remove(0);
        }
        self.note("attention", Some(Region::SensoryBuffer), &digits, StepResult::Percepts(digits.clone()));
        let readout = digits.iter().map(|&d| self.graph.label(d)).collect::<String>();
        Ok(ArithmeticReport { readout, digits, carries })
    }

    fn match_fact(&mut self, ar: &Arithmetic, x: PerceptId, y: PerceptId) -> Result<PerceptId, String> {
        let seq = [x, ar.plus, y];
        self.note("attention", Some(Region::SensoryBuffer), &seq, StepResult::Percepts(seq.to_vec()));
        let fired = self.propagate(Region::Tps, &seq).map_err(|e| e.to_string())?.activated;
        match fired.as_slice() {
            [s] if ar.sums.contains(s) => Ok(*s),
            [] => Err(format!("no fact fired for {} + {}", self.graph.label(x), self.graph.label(y))),
            _ => Err(format!("ambiguous facts for {} + {}", self.graph.label(x), self.graph.label(y))),
        }
    }
}

fn decimal(mut v: u64) -> Vec<u8> {
    let mut d = vec![(v % 10) as u8];
    v /= 10;
    while v > 0 {
        d.push((v % 10) as u8);
        v /= 10;
    }
    d.reverse();
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::MachineParams;

    #[test]
    fn declared_labels_match_install() {
        let mut m = Machine::new(MachineParams::default());
        m.install_arithmetic(&[]).unwrap();
        for (l, md) in arithmetic_percepts() {
            assert!(m.graph.lookup(&l, md).is_some(), "{l}");
        }
    }

    #[test]
    fn decimal_digits() {
        assert_eq!(decimal(0), vec![0]);
        assert_eq!(decimal(107), vec![1, 0, 7]);
    }
}
