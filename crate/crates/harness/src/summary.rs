//! Trace summaries and plot-ready series.

use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;

use crate::trace::{TraceRecord, FIRED};

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    pub records: usize,
    pub first_tick: Option<u64>,
    pub last_tick: Option<u64>,
    /// `module/event` → count.
    pub events: BTreeMap<String, usize>,
    pub fired: usize,
    pub assertions_passed: usize,
    pub assertions_failed: usize,
    /// Names of failed assertions.
    pub failed: Vec<String>,
}

pub fn summarize(records: &[TraceRecord]) -> Summary {
    let mut s = Summary {
        records: records.len(),
        first_tick: records.first().map(|r| r.tick),
        last_tick: records.last().map(|r| r.tick),
        ..Summary::default()
    };
    for r in records {
        *s.events.entry(format!("{}/{}", r.module, r.event)).or_default() += 1;
        if r.event == FIRED {
            s.fired += 1;
        }
        if r.module == "scenario" && r.event == "assert" {
            if r.payload["passed"].as_bool() == Some(true) {
                s.assertions_passed += 1;
            } else {
                s.assertions_failed += 1;
                s.failed.push(r.payload["name"].as_str().unwrap_or("?").to_owned());
            }
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub tick: u64,
    pub series: String,
    pub value: f64,
}

/// δ, V and weight series:
/// * `delta`, `value` from every TD step;
/// * `weight:<reward>` after each conditioning trial;
/// * `weight:<target>` after each relation training op.
pub fn series(records: &[TraceRecord]) -> Vec<Point> {
    let mut out = Vec::new();
    let mut push = |tick, series: String, v: Option<f64>| {
        if let Some(value) = v {
            out.push(Point { tick, series, value });
        }
    };
    for r in records {
        let p = &r.payload;
        match (r.module.as_str(), r.event.as_str()) {
            ("executive", "td") => {
                push(r.tick, "delta".into(), p["delta"].as_f64());
                push(r.tick, "value".into(), p["v_now"].as_f64());
            }
            ("executive", "trial") => {
                if let Some(t) = p["reward"].as_str() {
                    push(r.tick, format!("weight:{t}"), p["weight"].as_f64());
                }
            }
            ("semantic", "relation") => {
                if let Some(t) = p["target"].as_str() {
                    push(r.tick, format!("weight:{t}"), p["weight"].as_f64());
                }
            }
            _ => {}
        }
    }
    out
}

/// CSV with columns `tick,series,value`.
pub fn write_csv<W: Write>(w: W, points: &[Point]) -> anyhow::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["tick", "series", "value"])?;
    for p in points {
        wr.write_record([p.tick.to_string(), p.series.clone(), p.value.to_string()])?;
    }
    wr.flush()?;
    Ok(())
}
