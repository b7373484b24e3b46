use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use cogsim_harness::{collect_scenarios, load_scenario, read_trace, run_scenario, series, summarize, verify_paths, write_csv, Report, RunOptions};

#[derive(Parser)]
#[command(name = "cogsim", version, about = "Run and check cogsim scenario files")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario. Exit 0 when every assertion passes, 1 when one
    /// fails, 2 on a parse or runtime error.
    Run {
        file: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the NDJSON trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Abort once the clock passes this tick.
        #[arg(long)]
        max_ticks: Option<u64>,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run scenario files or directories of them. Exit 0 iff all pass.
    Verify {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Summarize a trace and optionally export δ/V/weight series as CSV.
    Report {
        trace: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn print_report(r: &Report) {
    for a in &r.assertions {
        let mark = if a.passed { "PASS" } else { "FAIL" };
        print!("{mark} {}: observed {}", a.name, a.observed);
        if !a.passed {
            print!(", expected {}", a.expected);
            if let Some(why) = &a.reason {
                print!(" ({why})");
            }
        }
        println!();
    }
    let c = &r.counters;
    println!(
        "{}: {} phases, {} ticks, {} trace records, {} fired, {}/{} assertions passed",
        r.scenario,
        c.phases,
        c.ticks,
        c.records,
        c.fired,
        c.assertions - c.failed,
        c.assertions
    );
}

fn real_main() -> anyhow::Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Run { file, seed, trace, max_ticks, json } => {
            let sc = load_scenario(&file)?;
            let run = run_scenario(&sc, &RunOptions { seed, max_ticks });
            if let Some(path) = trace {
                let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                run.trace.write_to(BufWriter::new(f)).with_context(|| format!("writing {}", path.display()))?;
            }
            if json {
                println!("{}", serde_json::to_string_pretty(&run.report)?);
            } else {
                print_report(&run.report);
            }
            if let Some(e) = &run.report.error {
                eprintln!("error: {e}");
                return Ok(ExitCode::from(2));
            }
            Ok(if run.report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Verify { paths } => {
            let files = collect_scenarios(&paths)?;
            anyhow::ensure!(!files.is_empty(), "no scenario files found");
            let results = verify_paths(&files, &RunOptions::default());
            let mut ok = true;
            for v in &results {
                let status = match &v.outcome {
                    Ok(run) if run.report.passed => "ok".to_owned(),
                    Ok(run) => match &run.report.error {
                        Some(e) => format!("error: {e}"),
                        None => {
                            let failed: Vec<&str> =
                                run.report.assertions.iter().filter(|a| !a.passed).map(|a| a.name.as_str()).collect();
                            format!("FAILED: {}", failed.join(", "))
                        }
                    },
                    Err(e) => format!("error: {e:#}"),
                };
                ok &= v.passed();
                println!("{} ... {status}", v.path.display());
            }
            println!("{}/{} scenarios passed", results.iter().filter(|v| v.passed()).count(), results.len());
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Report { trace, csv } => {
            let f = File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
            let records = read_trace(BufReader::new(f))?;
            let s = summarize(&records);
            println!("records: {}", s.records);
            if let (Some(a), Some(b)) = (s.first_tick, s.last_tick) {
                println!("ticks: {a}..={b}");
            }
            println!("fired records: {}", s.fired);
            for (k, n) in &s.events {
                println!("  {k}: {n}");
            }
            println!("assertions: {} passed, {} failed", s.assertions_passed, s.assertions_failed);
            for f in &s.failed {
                println!("  failed: {f}");
            }
            let pts = series(&records);
            if let Some(path) = csv {
                let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                write_csv(BufWriter::new(f), &pts)?;
                println!("wrote {} points to {}", pts.len(), path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
