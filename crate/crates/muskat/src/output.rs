//! Run artifacts: snapshot, diagnostics and stability CSV files and the manifest.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use muskat_core::contour::SplashReport;
use muskat_core::diagnostics::{DiagnosticsRecord, StabilityRecord};
use muskat_core::spectral::C64;
use serde::Serialize;

use crate::config::ScenarioConfig;

pub const SNAPSHOT_HEADER: [&str; 5] = ["alpha", "z1", "z2", "omega", "sigma"];
pub const DIAGNOSTICS_HEADER: [&str; 7] = ["t", "e3", "sigma_min", "chord_arc", "min_dist", "mean_omega", "dt"];
pub const STABILITY_HEADER: [&str; 3] = ["t", "h1_dist", "growth_exponent"];

/// Decimal text with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer(path: &Path) -> io::Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

fn into_io(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

/// One sample row of a curve snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotRow {
    pub alpha: f64,
    pub point: C64,
    pub omega: f64,
    pub sigma: f64,
}

pub fn write_snapshot(path: &Path, rows: &[SnapshotRow]) -> io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(SNAPSHOT_HEADER).map_err(into_io)?;
    for r in rows {
        w.write_record([
            fmt17(r.alpha),
            fmt17(r.point.re),
            fmt17(r.point.im),
            fmt17(r.omega),
            fmt17(r.sigma),
        ])
        .map_err(into_io)?;
    }
    w.flush()
}

/// Read a snapshot CSV, checking the header and that every field is a finite number.
pub fn read_snapshot(path: &Path) -> io::Result<Vec<SnapshotRow>> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut r = csv::Reader::from_path(path).map_err(into_io)?;
    let header = r.headers().map_err(into_io)?.clone();
    if header.iter().collect::<Vec<_>>() != SNAPSHOT_HEADER {
        return Err(bad(format!("expected header `{}`", SNAPSHOT_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(into_io)?;
        let mut v = [0.0; 5];
        for (slot, field) in v.iter_mut().zip(record.iter()) {
            *slot = field
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(format!("row {}: `{field}` is not a finite number", i + 2)))?;
        }
        rows.push(SnapshotRow {
            alpha: v[0],
            point: C64::new(v[1], v[2]),
            omega: v[3],
            sigma: v[4],
        });
    }
    Ok(rows)
}

/// Streams one row per accepted step.
pub struct DiagnosticsWriter {
    inner: csv::Writer<BufWriter<File>>,
}

impl DiagnosticsWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        let mut inner = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        inner.write_record(DIAGNOSTICS_HEADER).map_err(into_io)?;
        Ok(DiagnosticsWriter { inner })
    }

    pub fn push(&mut self, r: &DiagnosticsRecord) -> io::Result<()> {
        self.inner
            .write_record([
                fmt17(r.t),
                fmt17(r.e3),
                fmt17(r.sigma_min),
                fmt17(r.chord_arc),
                fmt17(r.min_dist),
                fmt17(r.mean_omega),
                fmt17(r.dt),
            ])
            .map_err(into_io)
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

pub fn write_stability(path: &Path, records: &[StabilityRecord]) -> io::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(STABILITY_HEADER).map_err(into_io)?;
    for r in records {
        w.write_record([fmt17(r.t), fmt17(r.h1_dist), fmt17(r.growth_exponent)])
            .map_err(into_io)?;
    }
    w.flush()
}

/// Pass/fail line of one acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplashSummary {
    pub is_splash: bool,
    pub t_s: Option<f64>,
    pub low_confidence: bool,
    pub alpha1: f64,
    pub alpha2: f64,
    pub x_s: [f64; 2],
    pub failures: Vec<String>,
}

impl From<&SplashReport> for SplashSummary {
    fn from(r: &SplashReport) -> Self {
        SplashSummary {
            is_splash: r.is_splash,
            t_s: r.t_s,
            low_confidence: r.low_confidence,
            alpha1: r.alpha1,
            alpha2: r.alpha2,
            x_s: [r.x_s.re, r.x_s.im],
            failures: r.failures.iter().map(|f| f.to_string()).collect(),
        }
    }
}

/// Everything recorded about one run. Keys serialize in declaration order.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config: ScenarioConfig,
    /// Seconds since the Unix epoch.
    pub start_time: f64,
    pub end_time: f64,
    pub termination: String,
    pub exit_code: i32,
    pub splash: Option<SplashSummary>,
    pub results: serde_json::Value,
    pub acceptance: Vec<CheckOutcome>,
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> io::Result<PathBuf> {
    let path = dir.join("manifest.json");
    let mut w = BufWriter::new(File::create(&path)?);
    serde_json::to_writer_pretty(&mut w, manifest)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(path)
}

pub fn ensure_dir(dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".muskat-write-probe");
    File::create(&probe)?;
    fs::remove_file(probe)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
    }

    #[test]
    fn snapshot_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap_0.csv");
        let rows: Vec<SnapshotRow> = (0..5)
            .map(|j| SnapshotRow {
                alpha: j as f64 * 0.1,
                point: C64::new(1.0 / (j + 1) as f64, -0.3 * j as f64),
                omega: 1e-17 * j as f64,
                sigma: 1.0 + j as f64,
            })
            .collect();
        write_snapshot(&path, &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("alpha,z1,z2,omega,sigma\n"));
        assert_eq!(read_snapshot(&path).unwrap(), rows);
    }

    #[test]
    fn malformed_snapshots_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "alpha,z1,z2\n0,0,0\n").unwrap();
        assert_eq!(read_snapshot(&path).unwrap_err().kind(), io::ErrorKind::InvalidData);
        fs::write(&path, "alpha,z1,z2,omega,sigma\n0,0,nan,0,0\n").unwrap();
        assert_eq!(read_snapshot(&path).unwrap_err().kind(), io::ErrorKind::InvalidData);
    }
}
