//! Line-delimited trace records.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::io::{self, BufRead, Write};

/// One event. Keys serialize in sorted order and payload objects are
/// `serde_json::Value` maps, which are also sorted, so equal runs give equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub event: String,
    pub module: String,
    pub payload: Value,
    pub tick: u64,
}

/// Event name for anything that fired; one record per nonempty fired set.
pub const FIRED: &str = "fired";

#[derive(Debug, Clone, Default)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, tick: u64, module: &str, event: &str, payload: Value) {
        debug_assert!(self.records.last().is_none_or(|r| r.tick <= tick), "trace tick went backwards");
        self.records.push(TraceRecord { event: event.to_owned(), module: module.to_owned(), payload, tick });
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, event: &str) -> usize {
        self.records.iter().filter(|r| r.event == event).count()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }
}

/// Reads an NDJSON trace, naming the line of the first bad record.
pub fn read_trace<R: BufRead>(r: R) -> anyhow::Result<Vec<TraceRecord>> {
    use anyhow::Context;
    let mut out: Vec<TraceRecord> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.with_context(|| format!("reading line {}", i + 1))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line).with_context(|| format!("line {}", i + 1))?;
        if let Some(prev) = out.last() {
            anyhow::ensure!(rec.tick >= prev.tick, "line {}: tick {} after {}", i + 1, rec.tick, prev.tick);
        }
        out.push(rec);
    }
    Ok(out)
}
