//! Named predicates over probe results.
//!
//! Evaluation is total: a missing probe, a bad path or a value of the wrong
//! type is a failed assertion, not an error.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub name: String,
    /// Probe or program result to inspect.
    pub probe: String,
    /// JSON pointer into the result; empty selects the whole result.
    #[serde(default)]
    pub path: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contains: Vec<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excludes: Vec<Value>,
    /// An explicit `null` is a value to compare against, not an absent key.
    #[serde(default, deserialize_with = "present", skip_serializing_if = "Option::is_none")]
    pub equals: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub le: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ge: Option<f64>,
    /// `|x| < abs_lt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_lt: Option<f64>,
    /// Length of an array, string or object.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub len: Option<usize>,
}

fn present<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Value>, D::Error> {
    Value::deserialize(d).map(Some)
}

impl Assertion {
    pub fn has_predicate(&self) -> bool {
        !self.contains.is_empty()
            || !self.excludes.is_empty()
            || self.equals.is_some()
            || self.lt.is_some()
            || self.le.is_some()
            || self.gt.is_some()
            || self.ge.is_some()
            || self.abs_lt.is_some()
            || self.len.is_some()
    }

    /// Human-readable form of the expectation.
    pub fn expected(&self) -> String {
        let mut parts = Vec::new();
        let list = |v: &[Value]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        if !self.contains.is_empty() {
            parts.push(format!("contains [{}]", list(&self.contains)));
        }
        if !self.excludes.is_empty() {
            parts.push(format!("excludes [{}]", list(&self.excludes)));
        }
        if let Some(v) = &self.equals {
            parts.push(format!("== {v}"));
        }
        for (op, v) in [("<", self.lt), ("<=", self.le), (">", self.gt), (">=", self.ge)] {
            if let Some(v) = v {
                parts.push(format!("{op} {v}"));
            }
        }
        if let Some(v) = self.abs_lt {
            parts.push(format!("|x| < {v}"));
        }
        if let Some(n) = self.len {
            parts.push(format!("len == {n}"));
        }
        parts.join(" and ")
    }

    pub fn evaluate(&self, results: &BTreeMap<String, Value>) -> AssertionOutcome {
        let (observed, failure) = match results.get(&self.probe) {
            None => (Value::Null, Some(format!("no result named `{}`", self.probe))),
            Some(root) => match root.pointer(&self.path) {
                None => (Value::Null, Some(format!("path `{}` not found", self.path))),
                Some(v) => (v.clone(), self.check(v).err()),
            },
        };
        AssertionOutcome {
            name: self.name.clone(),
            passed: failure.is_none(),
            observed,
            expected: self.expected(),
            reason: failure,
        }
    }

    fn check(&self, v: &Value) -> Result<(), String> {
        for c in &self.contains {
            if !holds(v, c) {
                return Err(format!("missing {c}"));
            }
        }
        for c in &self.excludes {
            if holds(v, c) {
                return Err(format!("unexpected {c}"));
            }
        }
        if let Some(e) = &self.equals {
            if !same(v, e) {
                return Err(format!("{v} != {e}"));
            }
        }
        type Cmp = fn(f64, f64) -> bool;
        let cmps: [(Option<f64>, Cmp, &str); 4] = [
            (self.lt, |x, b| x < b, "<"),
            (self.le, |x, b| x <= b, "<="),
            (self.gt, |x, b| x > b, ">"),
            (self.ge, |x, b| x >= b, ">="),
        ];
        for (bound, f, op) in cmps {
            if let Some(b) = bound {
                let x = v.as_f64().ok_or_else(|| format!("{v} is not a number"))?;
                if !f(x, b) {
                    return Err(format!("{x} {op} {b} is false"));
                }
            }
        }
        if let Some(b) = self.abs_lt {
            let x = v.as_f64().ok_or_else(|| format!("{v} is not a number"))?;
            if x.abs() >= b {
                return Err(format!("|{x}| >= {b}"));
            }
        }
        if let Some(n) = self.len {
            let got = match v {
                Value::Array(a) => a.len(),
                Value::String(s) => s.chars().count(),
                Value::Object(o) => o.len(),
                _ => return Err(format!("{v} has no length")),
            };
            if got != n {
                return Err(format!("length {got} != {n}"));
            }
        }
        Ok(())
    }
}

/// Membership for arrays, substring for strings, key presence for objects.
fn holds(v: &Value, item: &Value) -> bool {
    match (v, item) {
        (Value::Array(a), _) => a.iter().any(|x| same(x, item)),
        (Value::String(s), Value::String(sub)) => s.contains(sub.as_str()),
        (Value::Object(o), Value::String(k)) => o.contains_key(k),
        _ => false,
    }
}

/// Equality that treats `1` and `1.0` as the same number.
fn same(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) if a.is_number() && b.is_number() => x == y,
        _ => a == b,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssertionOutcome {
    pub name: String,
    pub passed: bool,
    pub observed: Value,
    pub expected: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}
