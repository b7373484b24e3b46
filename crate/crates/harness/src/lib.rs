//! Scenario files, deterministic runs, assertions and traces for the cogsim
//! engine. The `cogsim` binary is a thin layer over [`run_scenario`],
//! [`verify_paths`] and [`summarize`].

pub mod assertion;
pub mod runner;
pub mod scenario;
pub mod stats;
pub mod summary;
pub mod trace;
pub mod validate;

pub use assertion::{Assertion, AssertionOutcome};
pub use runner::{run_scenario, Report, Run, RunError, RunOptions};
pub use scenario::{Phase, Scenario, SCHEMA_VERSION};
pub use summary::{series, summarize, write_csv, Point, Summary};
pub use trace::{read_trace, Trace, TraceRecord};
pub use validate::{parse_scenario, Issue, ScenarioError};

use anyhow::Context;
use std::path::{Path, PathBuf};

/// Reads and parses a scenario file.
pub fn load_scenario(path: &Path) -> anyhow::Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("parsing {}", path.display()))
}

/// `*.json` files under each path (directories are not searched recursively), sorted.
pub fn collect_scenarios(paths: &[PathBuf]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()?;
            found.retain(|f| f.extension().is_some_and(|x| x == "json"));
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

#[derive(Debug)]
pub struct Verified {
    pub path: PathBuf,
    /// Parse failures and runtime errors end up here as `Err`.
    pub outcome: anyhow::Result<Run>,
}

impl Verified {
    pub fn passed(&self) -> bool {
        self.outcome.as_ref().is_ok_and(|r| r.report.passed)
    }
}

/// Runs each scenario on its own thread; results keep the input order.
pub fn verify_paths(paths: &[PathBuf], opts: &RunOptions) -> Vec<Verified> {
    std::thread::scope(|s| {
        let handles: Vec<_> = paths
            .iter()
            .map(|p| s.spawn(move || Verified { path: p.clone(), outcome: load_scenario(p).map(|sc| run_scenario(&sc, opts)) }))
            .collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    })
}
