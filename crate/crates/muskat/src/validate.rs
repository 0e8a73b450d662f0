//! Geometry report for a snapshot file.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

use muskat_core::conformal::BranchSpec;
use muskat_core::contour::{self, CurveMode, SampledCurve, SplashCurveParams, SplashReport};
use muskat_core::diagnostics;
use muskat_core::spectral::C64;

use crate::error::{RunError, EXIT_GEOMETRY, EXIT_OK};
use crate::output;

#[derive(Debug, Clone)]
pub struct CurveReport {
    pub samples: usize,
    pub mode: CurveMode,
    /// Present for tilde snapshots: chord-arc, arclength spread and distances to `q⁰…q⁴`.
    pub tilde: Option<(f64, f64, [f64; 5])>,
    pub chord_arc: f64,
    pub min_dist: Option<f64>,
    pub min_speed: f64,
    /// First polygon edge crossing another edge, if any.
    pub crossing: Option<usize>,
    pub splash: SplashReport,
}

impl CurveReport {
    /// Regular, and either embedded or an exact splash curve.
    pub fn admissible(&self) -> bool {
        let embedded = self.crossing.is_none() && self.chord_arc > 0.0;
        self.min_speed > 0.0 && (embedded || self.splash.is_splash)
    }

    pub fn exit_code(&self) -> i32 {
        if self.admissible() {
            EXIT_OK
        } else {
            EXIT_GEOMETRY
        }
    }
}

impl fmt::Display for CurveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            CurveMode::GraphPeriodic => "graph-periodic (physical)",
            CurveMode::Closed => "closed (tilde)",
        };
        writeln!(f, "samples: {}", self.samples)?;
        writeln!(f, "mode: {mode}")?;
        if let Some((chord_arc, spread, q)) = self.tilde {
            writeln!(f, "tilde chord_arc: {chord_arc:e}")?;
            writeln!(f, "tilde arclength spread: {spread:e}")?;
            let q: Vec<String> = q.iter().map(|d| format!("{d:.6e}")).collect();
            writeln!(f, "tilde distance to q0..q4: {}", q.join(" "))?;
        }
        writeln!(f, "chord_arc: {:e}", self.chord_arc)?;
        match self.min_dist {
            Some(d) => writeln!(f, "min_dist: {d:e}")?,
            None => writeln!(f, "min_dist: none")?,
        }
        writeln!(f, "min |z_alpha|: {:e}", self.min_speed)?;
        match self.crossing {
            Some(j) => writeln!(f, "self-crossing: edge {j}")?,
            None => writeln!(f, "self-crossing: none")?,
        }
        writeln!(f, "splash curve: {}", self.splash.is_splash)?;
        for failure in &self.splash.failures {
            writeln!(f, "  {failure}")?;
        }
        write!(f, "admissible: {}", self.admissible())
    }
}

/// Graph-periodic when the last sample sits one period to the left of the first.
pub fn detect_mode(points: &[C64]) -> CurveMode {
    let (first, last) = (points[0], points[points.len() - 1]);
    if (first + TAU - last).norm() < (first - last).norm() {
        CurveMode::GraphPeriodic
    } else {
        CurveMode::Closed
    }
}

pub fn inspect(curve: &SampledCurve) -> Result<CurveReport, RunError> {
    let branch = BranchSpec::through(SplashCurveParams::default().contact_point())?;
    let (tilde, physical) = match curve.mode() {
        CurveMode::GraphPeriodic => (None, curve.clone()),
        CurveMode::Closed => {
            let summary = (
                contour::chord_arc_constant(curve),
                diagnostics::arclength_spread(curve),
                contour::singular_distances(curve),
            );
            (Some(summary), contour::from_tilde(curve, &branch)?)
        }
    };
    Ok(CurveReport {
        samples: curve.n(),
        mode: curve.mode(),
        tilde,
        chord_arc: contour::chord_arc_constant(&physical),
        min_dist: contour::interface_min_distance(&physical, 0.25)
            .ok()
            .map(|p| p.distance),
        min_speed: physical.tangent().iter().fold(f64::INFINITY, |m, t| m.min(t.norm())),
        crossing: contour::first_crossing(&physical),
        splash: contour::validate_splash_curve(&physical, &branch),
    })
}

pub fn validate_file(path: &Path) -> Result<CurveReport, RunError> {
    let rows = output::read_snapshot(path)?;
    if rows.is_empty() {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "snapshot has no samples").into());
    }
    let points: Vec<C64> = rows.iter().map(|r| r.point).collect();
    let curve = SampledCurve::from_points(detect_mode(&points), &points)?;
    inspect(&curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_are_detected() {
        let graph = SampledCurve::flat(32).unwrap();
        assert_eq!(detect_mode(&graph.points()), CurveMode::GraphPeriodic);
        let circle = SampledCurve::circle(32, C64::new(0.0, -0.3), 0.5).unwrap();
        assert_eq!(detect_mode(&circle.points()), CurveMode::Closed);
    }

    #[test]
    fn exact_splash_is_admissible_and_near_splash_is_embedded() {
        let exact = contour::make_splash_curve(
            &SplashCurveParams {
                neck_width: 0.0,
                ..Default::default()
            },
            256,
        )
        .unwrap();
        let report = inspect(&exact).unwrap();
        assert!(report.splash.is_splash);
        assert!(report.admissible());
        let near = contour::make_splash_curve(&SplashCurveParams::default(), 256).unwrap();
        let report = inspect(&near).unwrap();
        assert!(!report.splash.is_splash);
        assert!(report.chord_arc > 0.0 && report.admissible());
        assert!((report.min_dist.unwrap() - 0.05).abs() < 0.01);
    }

    #[test]
    fn crossing_curve_is_rejected() {
        let curve = SampledCurve::from_fn(CurveMode::GraphPeriodic, 64, |a| {
            C64::new(a - 1.5 * a.sin(), -0.5 - 0.3 * a.cos())
        })
        .unwrap();
        let report = inspect(&curve).unwrap();
        assert!(report.crossing.is_some());
        assert!(!report.admissible());
        assert_eq!(report.exit_code(), EXIT_GEOMETRY);
    }
}
