use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn muskat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muskat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn config_errors_exit_with_code_two_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "scenario = flat\nn = 100\n");
    let out = muskat(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2: n must be a power of two"), "{err}");
}

#[test]
fn missing_files_exit_with_code_six() {
    assert_eq!(muskat(&["run", "/nonexistent/run.cfg"]).status.code(), Some(6));
    assert_eq!(
        muskat(&["validate-curve", "/nonexistent/snap_0.csv"]).status.code(),
        Some(6)
    );
}

#[test]
fn flat_run_writes_artifacts_under_the_override_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("flat-out");
    let cfg = write(
        dir.path(),
        "flat.cfg",
        "scenario = flat\nn = 64\noutput_dir = ignored\nsnapshot_every = 40\n",
    );
    let out = muskat(&["run", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[PASS] steady state"), "{stdout}");
    for name in [
        "manifest.json",
        "diagnostics.csv",
        "snap_0.csv",
        "snap_40.csv",
        "snap_80.csv",
        "snap_100.csv",
    ] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    assert!(!dir.path().join("ignored").exists());
    let diag = fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    let mut lines = diag.lines();
    assert_eq!(lines.next(), Some("t,e3,sigma_min,chord_arc,min_dist,mean_omega,dt"));
    assert_eq!(lines.count(), 101);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let keys: Vec<&str> = manifest.as_object().unwrap().keys().map(|k| k.as_str()).collect();
    for key in [
        "config",
        "start_time",
        "end_time",
        "termination",
        "splash",
        "acceptance",
    ] {
        assert!(keys.contains(&key), "{key}");
    }
    assert_eq!(manifest["config"]["output_dir"], out_dir.to_str().unwrap());
    assert!(manifest["results"]["max_displacement"].as_f64().unwrap() < 1e-10);
    let snap = fs::read_to_string(out_dir.join("snap_100.csv")).unwrap();
    assert!(snap.starts_with("alpha,z1,z2,omega,sigma\n"));
    assert_eq!(snap.lines().count(), 65);
}

#[test]
fn manifest_text_is_written_last_and_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = muskat(&["selftest", "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let config_at = text.find("\"config\"").unwrap();
    let acceptance_at = text.find("\"acceptance\"").unwrap();
    assert!(config_at < acceptance_at);
    let manifest: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(manifest["config"]["scenario"], "selftest");
    assert_eq!(manifest["acceptance"].as_array().unwrap().len(), 7);
    assert!(manifest["acceptance"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["passed"] == true));
}

#[test]
fn identical_configs_give_identical_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "decay.cfg",
        "scenario = decay\nn = 64\nt_max = 0.2\nsnapshot_every = 3\n",
    );
    let runs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out_dir = dir.path().join(name);
            let out = muskat(&["run", &cfg, "--output-dir", out_dir.to_str().unwrap()]);
            assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
            out_dir
        })
        .collect();
    let mut compared = 0;
    for entry in fs::read_dir(&runs[0]).unwrap() {
        let name = entry.unwrap().file_name();
        if Path::new(&name).extension().is_some_and(|e| e == "csv") {
            assert_eq!(
                fs::read(runs[0].join(&name)).unwrap(),
                fs::read(runs[1].join(&name)).unwrap()
            );
            compared += 1;
        }
    }
    assert!(compared >= 3);
}

#[test]
fn validate_curve_reports_snapshot_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let n = 64;
    let mut embedded = String::from("alpha,z1,z2,omega,sigma\n");
    let mut crossing = embedded.clone();
    for j in 0..n {
        let a = -std::f64::consts::PI + std::f64::consts::TAU * j as f64 / n as f64;
        embedded.push_str(&format!("{a},{a},{},0,1\n", -0.5 + 0.2 * a.cos()));
        crossing.push_str(&format!("{a},{},{},0,1\n", a - 1.5 * a.sin(), -0.5 - 0.3 * a.cos()));
    }
    let ok = muskat(&["validate-curve", &write(dir.path(), "ok.csv", &embedded)]);
    assert_eq!(ok.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(
        stdout.contains("mode: graph-periodic") && stdout.contains("admissible: true"),
        "{stdout}"
    );
    let bad = muskat(&["validate-curve", &write(dir.path(), "bad.csv", &crossing)]);
    assert_eq!(bad.status.code(), Some(3));
    let header = muskat(&["validate-curve", &write(dir.path(), "h.csv", "alpha,z1,z2\n0,0,0\n")]);
    assert_eq!(header.status.code(), Some(6));
}
