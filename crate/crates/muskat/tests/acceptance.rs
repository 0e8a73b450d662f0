//! Acceptance suite: runs every scenario at its default settings and prints one
//! pass/fail line per criterion. A criterion checked by several scenarios passes
//! only if it passes in each of them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use muskat::checks;
use muskat::output::CheckOutcome;
use muskat::{execute, parse_config, Finished};

fn run(text: &str, dir: &std::path::Path) -> Finished {
    let mut config = parse_config(text).expect("valid config");
    config.output_dir = dir.to_path_buf();
    let started = Instant::now();
    let finished = execute(&config).expect("manifest written");
    eprintln!(
        "  {} finished in {:.1} s: {} (exit {})",
        config.scenario,
        started.elapsed().as_secs_f64(),
        finished.manifest.termination,
        finished.exit_code
    );
    finished
}

/// Contract examples of the run interface, reported as extra failures.
fn interface_examples(runs: &[(&str, &Finished)], root: &std::path::Path) -> Vec<String> {
    let mut problems = Vec::new();
    for (name, f) in runs {
        if !f.manifest_path.exists() {
            problems.push(format!("{name}: manifest missing"));
        }
        let names: Vec<&str> = f.manifest.acceptance.iter().map(|c| c.name.as_str()).collect();
        if names.iter().any(|n| !checks::ALL.contains(n)) {
            problems.push(format!("{name}: unknown check in manifest"));
        }
    }
    let flat = runs.iter().find(|r| r.0 == "flat").unwrap().1;
    let displacement = flat.manifest.results["max_displacement"].as_f64().unwrap_or(f64::NAN);
    if !(flat.exit_code == 0 && displacement < 1e-10) {
        problems.push(format!("flat: exit {} displacement {displacement}", flat.exit_code));
    }
    let splash = runs.iter().find(|r| r.0 == "splash").unwrap().1;
    let summary = splash.manifest.splash.as_ref();
    let sigma = splash.manifest.results["final_sigma_min"].as_f64().unwrap_or(f64::NAN);
    if !(summary.is_some_and(|s| s.is_splash && s.t_s.is_some_and(f64::is_finite)) && sigma > 0.0) {
        problems.push("splash: manifest lacks is_splash, finite T_s or final min sigma > 0".into());
    }
    let csv = std::fs::read_to_string(root.join("stability").join("stability.csv")).unwrap_or_default();
    let h1_0 = csv
        .lines()
        .nth(1)
        .and_then(|l| l.split(',').nth(1))
        .and_then(|v| v.parse::<f64>().ok())
        .unwrap_or(f64::NAN);
    if !((h1_0 - 1e-3 * TAU.sqrt()).abs() <= 1e-6) {
        problems.push(format!("stability: h1_dist(0) = {h1_0}"));
    }
    problems
}

fn main() -> ExitCode {
    let root = tempfile::tempdir().expect("temporary directory");
    let scenarios = [
        ("selftest", ""),
        ("flat", "scenario = flat"),
        ("decay", "scenario = decay"),
        ("stability", "scenario = stability\nperturb_amplitude = 1e-3"),
        ("splash", "scenario = splash\nneck_width = 0.05"),
    ];
    eprintln!("running {} scenarios", scenarios.len());
    let finished: Vec<(&str, Finished)> = scenarios
        .iter()
        .map(|(name, text)| (*name, run(text, &root.path().join(name))))
        .collect();
    let mut merged: Vec<CheckOutcome> = Vec::new();
    for (scenario, f) in &finished {
        for check in &f.manifest.acceptance {
            let detail = format!("[{scenario}] {}", check.detail);
            match merged.iter_mut().find(|m| m.name == check.name) {
                Some(m) => {
                    m.passed &= check.passed;
                    m.detail = format!("{}; {detail}", m.detail);
                }
                None => merged.push(CheckOutcome::new(&check.name, check.passed, detail)),
            }
        }
    }
    let mut failed = 0;
    println!("acceptance criteria:");
    for name in checks::ALL {
        let line = match merged.iter().find(|m| m.name == name) {
            Some(m) => {
                failed += usize::from(!m.passed);
                format!("{} {name}: {}", if m.passed { "PASS" } else { "FAIL" }, m.detail)
            }
            None => {
                failed += 1;
                format!("FAIL {name}: not checked by any scenario")
            }
        };
        println!("{line}");
    }
    let refs: Vec<(&str, &Finished)> = finished.iter().map(|(n, f)| (*n, f)).collect();
    let problems = interface_examples(&refs, root.path());
    for p in &problems {
        println!("FAIL run interface: {p}");
    }
    println!(
        "acceptance: {} of {} criteria passed{}",
        checks::ALL.len() - failed,
        checks::ALL.len(),
        if problems.is_empty() {
            ""
        } else {
            "; run interface examples failed"
        }
    );
    if failed == 0 && problems.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
