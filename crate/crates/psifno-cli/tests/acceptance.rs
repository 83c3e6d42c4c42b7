//! Acceptance suite: every experiment at its default (acceptance) settings, one line per
//! criterion, nonzero exit if any criterion fails. Criterion 11 reruns the fast experiments and
//! compares every output file byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use psifno_cli::config::{Experiment, ExperimentConfig};
use psifno_cli::{run, CriterionResult};

const SEED: u64 = 20_240_601;

/// Expected wall-clock budget per criterion, seconds.
fn budget(id: u32) -> f64 {
    match id {
        1 => 10.0,
        2 => 30.0,
        3 => 10.0,
        4 => 60.0,
        5 => 90.0,
        6 => 60.0,
        7 | 8 => 300.0,
        9 => 60.0,
        10 => 30.0,
        _ => 5.0,
    }
}

const KINDS: [&str; 8] = [
    "spectral-check",
    "darcy-converge",
    "property-suite",
    "ns-converge",
    "darcy-emulate",
    "ns-emulate",
    "ft-emulate",
    "deeponet-export",
];

/// Experiments cheap enough to run twice for the determinism check.
const RERUN: [&str; 4] = ["spectral-check", "property-suite", "ft-emulate", "deeponet-export"];

fn config(kind: &str) -> ExperimentConfig {
    ExperimentConfig::new(Experiment::default_for(kind).expect("known kind"), SEED)
}

/// Every file below `dir` except the wall-clock timings, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let mut entries: Vec<_> = fs::read_dir(dir).expect("readable").map(|e| e.expect("entry").path()).collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else if p.file_name().is_some_and(|n| n != "timings.json") {
                out.insert(p.strip_prefix(root).expect("prefix").to_path_buf(), fs::read(&p).expect("readable"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn main() -> ExitCode {
    let root = tempfile::tempdir().expect("temp dir");
    let mut results: Vec<(CriterionResult, f64)> = Vec::new();
    let mut errors = Vec::new();

    for kind in KINDS {
        let start = Instant::now();
        match run(&config(kind), &root.path().join("first").join(kind), None) {
            Ok(out) => {
                let secs = start.elapsed().as_secs_f64();
                let n = out.report.criteria.len() as f64;
                for c in out.report.criteria {
                    results.push((c, secs / n));
                }
            }
            Err(e) => errors.push(format!("{kind}: {e}")),
        }
    }

    let start = Instant::now();
    let mut det = CriterionResult::new(11, "determinism");
    let mut compared = 0usize;
    for kind in RERUN {
        let first = root.path().join("first").join(kind);
        let second = root.path().join("second").join(kind);
        if let Err(e) = run(&config(kind), &second, None) {
            det.require(false, format!("{kind} rerun failed: {e}"));
            continue;
        }
        if !first.exists() {
            det.require(false, format!("{kind} has no first run"));
            continue;
        }
        let (a, b) = (snapshot(&first), snapshot(&second));
        det.require(a.keys().eq(b.keys()), format!("{kind}: different file sets"));
        for (path, bytes) in &a {
            compared += 1;
            det.require(b.get(path) == Some(bytes), format!("{kind}: {} differs", path.display()));
        }
    }
    det.record("files_compared", compared as f64);
    results.push((det, start.elapsed().as_secs_f64()));

    results.sort_by_key(|(c, _)| c.id);
    let mut all_pass = errors.is_empty();
    for (c, secs) in &results {
        all_pass &= c.pass;
        println!("{}  ({secs:.1} s, budget {} s)", c.summary_line(), budget(c.id));
    }
    let seen: Vec<u32> = results.iter().map(|(c, _)| c.id).collect();
    for id in 1..=11 {
        if !seen.contains(&id) {
            println!("criterion {id}: FAIL (did not run)");
            all_pass = false;
        }
    }
    for e in &errors {
        println!("error: {e}");
    }
    println!("acceptance: {}", if all_pass { "PASS" } else { "FAIL" });
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
