//! Sampled interfaces, the splash-curve family, chord-arc functionals and transport
//! between the physical strip and the tilde plane.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::conformal::{self, BranchSpec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{self, GridFunction, Spectrum, C64};

const TAU: f64 = 2.0 * PI;

/// Refined distances below this count as a self-contact.
pub const CONTACT_TOLERANCE: f64 = 1e-8;
/// Bound on `|∂_α z₁|` at a contact for the tangency check.
pub const TANGENCY_TOLERANCE: f64 = 1e-8;
/// Minimum clearance between the tilde image and the singular points.
pub const SINGULAR_CLEARANCE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMode {
    /// `z(α + 2π) = z(α) + (2π, 0)`; the fluid lies below.
    GraphPeriodic,
    /// `z(α + 2π) = z(α)`, counterclockwise.
    Closed,
}

/// Interface sampled at the grid nodes `α_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    mode: CurveMode,
    x: GridFunction,
    y: GridFunction,
}

impl SampledCurve {
    pub fn new(mode: CurveMode, x: GridFunction, y: GridFunction) -> Result<Self> {
        if x.n() != y.n() {
            return Err(Error::LengthMismatch(x.n(), y.n()));
        }
        let curve = SampledCurve { mode, x, y };
        let speed: Vec<f64> = curve.tangent().iter().map(|t| t.norm()).collect();
        let top = speed.iter().fold(0.0f64, |m, &s| m.max(s));
        if let Some(j) = speed.iter().position(|&s| !(s > 1e-10 * top)) {
            return Err(Error::DegenerateTangent(j));
        }
        Ok(curve)
    }

    pub fn from_points(mode: CurveMode, points: &[C64]) -> Result<Self> {
        let x = GridFunction::new(points.iter().map(|p| p.re).collect())?;
        let y = GridFunction::new(points.iter().map(|p| p.im).collect())?;
        Self::new(mode, x, y)
    }

    pub fn from_fn(mode: CurveMode, n: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        let pts: Vec<C64> = spectral::nodes(n).into_iter().map(f).collect();
        Self::from_points(mode, &pts)
    }

    /// The flat graph `(α, 0)`.
    pub fn flat(n: usize) -> Result<Self> {
        Self::from_fn(CurveMode::GraphPeriodic, n, |a| C64::new(a, 0.0))
    }

    pub fn circle(n: usize, center: C64, radius: f64) -> Result<Self> {
        Self::from_fn(CurveMode::Closed, n, |a| center + C64::from_polar(radius, a))
    }

    pub fn mode(&self) -> CurveMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    pub fn x(&self) -> &GridFunction {
        &self.x
    }

    pub fn y(&self) -> &GridFunction {
        &self.y
    }

    pub fn point(&self, j: usize) -> C64 {
        C64::new(self.x.values()[j], self.y.values()[j])
    }

    pub fn points(&self) -> Vec<C64> {
        (0..self.n()).map(|j| self.point(j)).collect()
    }

    /// The periodic part of the samples: `z - (α, 0)` for graphs, `z` for closed curves.
    pub fn offsets(&self) -> Vec<C64> {
        let n = self.n();
        let mut pts = self.points();
        if self.mode == CurveMode::GraphPeriodic {
            for (j, p) in pts.iter_mut().enumerate() {
                p.re -= spectral::node(n, j);
            }
        }
        pts
    }

    /// Spectral `z_α`.
    pub fn tangent(&self) -> Vec<C64> {
        let mut t = spectral::deriv_complex(&self.offsets());
        if self.mode == CurveMode::GraphPeriodic {
            for v in t.iter_mut() {
                v.re += 1.0;
            }
        }
        t
    }

    /// Spectral `z_αα`.
    pub fn curvature_vector(&self) -> Vec<C64> {
        spectral::deriv_complex(&spectral::deriv_complex(&self.offsets()))
    }

    pub fn interpolant(&self) -> CurveInterpolant {
        CurveInterpolant {
            mode: self.mode,
            spectrum: Spectrum::of_complex(&self.offsets()),
        }
    }

    /// Interpolated points at arbitrary parameters.
    pub fn resample(&self, params: &[f64]) -> Vec<C64> {
        let interp = self.interpolant();
        params.iter().map(|&a| interp.point(a)).collect()
    }

    /// The same geometric curve sampled at `α_j + shift`.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        let params: Vec<f64> = spectral::nodes(self.n()).iter().map(|a| a + shift).collect();
        Self::from_points(self.mode, &self.resample(&params))
    }

    /// Add a planar displacement to every sample.
    pub fn displaced(&self, dx: &[f64], dy: &[f64]) -> Result<Self> {
        let n = self.n();
        if dx.len() != n || dy.len() != n {
            return Err(Error::LengthMismatch(n, dx.len().min(dy.len())));
        }
        let x: Vec<f64> = self.x.values().iter().zip(dx).map(|(a, b)| a + b).collect();
        let y: Vec<f64> = self.y.values().iter().zip(dy).map(|(a, b)| a + b).collect();
        Self::new(self.mode, GridFunction::new(x)?, GridFunction::new(y)?)
    }
}

/// Band-limited interpolant of a sampled curve.
#[derive(Debug, Clone)]
pub struct CurveInterpolant {
    mode: CurveMode,
    spectrum: Spectrum,
}

impl CurveInterpolant {
    /// `[z, z_α, z_αα]` at `alpha`; graph curves unroll beyond one period.
    pub fn eval(&self, alpha: f64) -> [C64; 3] {
        let mut v = self.spectrum.evaluate_with_derivatives(alpha);
        if self.mode == CurveMode::GraphPeriodic {
            v[0].re += alpha;
            v[1].re += 1.0;
        }
        v
    }

    pub fn point(&self, alpha: f64) -> C64 {
        self.eval(alpha)[0]
    }

    pub fn tangent(&self, alpha: f64) -> C64 {
        self.eval(alpha)[1]
    }
}

/// Distance on the parameter circle.
pub fn param_distance(a: f64, b: f64) -> f64 {
    let d = conformal::wrap_angle(a - b);
    d.min(TAU - d)
}

fn wrap_param(a: f64) -> f64 {
    conformal::wrap_angle(a + PI) - PI
}

/// Resample a graph-periodic curve at `z₁ = α_j`, so that curves with different
/// tangential parameterizations can be compared sample by sample.
pub fn resample_as_graph(curve: &SampledCurve) -> Result<SampledCurve> {
    if curve.mode != CurveMode::GraphPeriodic {
        return Err(Error::InvalidParameter(
            "graph resampling expects a graph-periodic curve",
        ));
    }
    if curve.tangent().iter().any(|t| !(t.re > 0.0)) {
        return Err(Error::InvalidParameter(
            "curve is not a graph over the first coordinate",
        ));
    }
    let interp = curve.interpolant();
    let mut pts = Vec::with_capacity(curve.n());
    for x in spectral::nodes(curve.n()) {
        let mut a = x;
        for _ in 0..60 {
            let [z, dz, _] = interp.eval(a);
            let step = (z.re - x) / dz.re;
            a -= step;
            if step.abs() <= 1e-15 * (1.0 + x.abs()) {
                break;
            }
        }
        let z = interp.point(a);
        if !((z.re - x).abs() < 1e-12) {
            return Err(Error::InvalidParameter("graph resampling did not converge"));
        }
        pts.push(C64::new(x, z.im));
    }
    SampledCurve::from_points(CurveMode::GraphPeriodic, &pts)
}

/// `curve + amplitude × (profile_x, profile_y)`.
pub fn perturb(curve: &SampledCurve, amplitude: f64, profile: (&GridFunction, &GridFunction)) -> Result<SampledCurve> {
    if !amplitude.is_finite() {
        return Err(Error::InvalidParameter("perturbation amplitude must be finite"));
    }
    let dx: Vec<f64> = profile.0.values().iter().map(|v| amplitude * v).collect();
    let dy: Vec<f64> = profile.1.values().iter().map(|v| amplitude * v).collect();
    curve.displaced(&dx, &dy)
}

/// A pair of curve parameters and the distance between their points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPair {
    pub distance: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub point1: C64,
    pub point2: C64,
}

/// Newton iteration for a critical pair of `|z(a) - z(b)|`: the chord is orthogonal
/// to the tangent at `b` and the two tangents are parallel. Non-degenerate at a
/// tangential contact, unlike the squared distance itself.
fn refine_pair(interp: &CurveInterpolant, mut a: f64, mut b: f64, max_step: f64) -> (f64, f64) {
    for _ in 0..40 {
        let [za, da, dda] = interp.eval(a);
        let [zb, db, ddb] = interp.eval(b);
        let delta = za - zb;
        let f1 = (delta.conj() * db).re;
        let f2 = (da.conj() * db).im;
        let j11 = (da.conj() * db).re;
        let j12 = -db.norm_sqr() + (delta.conj() * ddb).re;
        let j21 = (dda.conj() * db).im;
        let j22 = (da.conj() * ddb).im;
        let det = j11 * j22 - j12 * j21;
        if !(det.abs() > 0.0) || !det.is_finite() {
            break;
        }
        let mut sa = (f1 * j22 - f2 * j12) / det;
        let mut sb = (j11 * f2 - j21 * f1) / det;
        let len = sa.hypot(sb);
        if len > max_step {
            sa *= max_step / len;
            sb *= max_step / len;
        }
        a -= sa;
        b -= sb;
        if len < 1e-15 {
            break;
        }
    }
    (a, b)
}

fn pair_from(interp: &CurveInterpolant, a: f64, b: f64) -> ClosestPair {
    let p1 = interp.point(a);
    let p2 = interp.point(b);
    ClosestPair {
        distance: (p1 - p2).norm(),
        alpha1: wrap_param(a),
        alpha2: wrap_param(b),
        point1: p1,
        point2: p2,
    }
}

fn image_shifts(mode: CurveMode) -> &'static [i32] {
    match mode {
        CurveMode::GraphPeriodic => &[-1, 0, 1],
        CurveMode::Closed => &[0],
    }
}

/// Chord between samples `i` and `j + m·n`, and its parameter gap.
fn chord(curve: &SampledCurve, pts: &[C64], i: usize, j: usize, m: i32) -> (f64, f64) {
    let n = curve.n();
    let ai = spectral::node(n, i);
    let aj = spectral::node(n, j) + TAU * m as f64;
    let shift = match curve.mode {
        CurveMode::GraphPeriodic => C64::new(TAU * m as f64, 0.0),
        CurveMode::Closed => C64::new(0.0, 0.0),
    };
    let gap = match curve.mode {
        CurveMode::GraphPeriodic => (ai - aj).abs(),
        CurveMode::Closed => param_distance(ai, aj),
    };
    ((pts[i] - pts[j] - shift).norm(), gap)
}

fn nearest_image(curve: &SampledCurve, i: usize, j: usize) -> i32 {
    let n = curve.n();
    let d = spectral::node(n, i) - spectral::node(n, j);
    match curve.mode {
        CurveMode::GraphPeriodic if d > PI => 1,
        CurveMode::GraphPeriodic if d < -PI => -1,
        _ => 0,
    }
}

/// `min |z(α) - z(β)| / dist(α, β)` over sample pairs and the tangential limit
/// `min |z_α|`, with sub-grid refinement at the worst pair.
pub fn chord_arc_constant(curve: &SampledCurve) -> f64 {
    let n = curve.n();
    let pts = curve.points();
    let speed_min = curve.tangent().iter().fold(f64::INFINITY, |m, t| m.min(t.norm()));
    let mut best = (f64::INFINITY, 0, 0, 0);
    for i in 0..n {
        for j in i + 1..n {
            let m = nearest_image(curve, i, j);
            let (d, gap) = chord(curve, &pts, i, j, m);
            let r = d / gap;
            if r < best.0 {
                best = (r, i, j, m);
            }
        }
    }
    let mut ratio = best.0.min(speed_min);
    let (_, i, j, m) = best;
    let index_gap = (j - i).min(n + i - j);
    if index_gap >= 2 {
        let h = TAU / n as f64;
        let interp = curve.interpolant();
        let a0 = spectral::node(n, i);
        let b0 = spectral::node(n, j) + TAU * m as f64;
        let (a, b) = refine_pair(&interp, a0, b0, h);
        if (a - a0).abs() <= 2.0 * h && (b - b0).abs() <= 2.0 * h {
            let gap = match curve.mode {
                CurveMode::GraphPeriodic => (a - b).abs(),
                CurveMode::Closed => param_distance(a, b),
            };
            if gap > 0.0 {
                ratio = ratio.min((interp.point(a) - interp.point(b)).norm() / gap);
            }
        }
    }
    ratio
}

/// `sup |β| / |z(α) - z(α - β)|`, reported as `+∞` once the curve touches itself.
pub fn f_functional(curve: &SampledCurve) -> f64 {
    let c = chord_arc_constant(curve);
    if c < CONTACT_TOLERANCE {
        f64::INFINITY
    } else {
        1.0 / c
    }
}

/// Minimum distance over parameter pairs at least `min_separation` apart, refined
/// below the grid scale.
pub fn interface_min_distance(curve: &SampledCurve, min_separation: f64) -> Result<ClosestPair> {
    if !(min_separation > 0.0 && min_separation < PI) {
        return Err(Error::InvalidParameter("minimum separation must lie in (0, π)"));
    }
    let n = curve.n();
    let h = TAU / n as f64;
    let pts = curve.points();
    let mut best = (f64::INFINITY, 0, 0, 0);
    for i in 0..n {
        for j in i + 1..n {
            for &m in image_shifts(curve.mode) {
                let (d, gap) = chord(curve, &pts, i, j, m);
                if gap >= min_separation - 1e-12 && d < best.0 {
                    best = (d, i, j, m);
                }
            }
        }
    }
    let (d, i, j, m) = best;
    if !d.is_finite() {
        return Err(Error::InvalidParameter("no parameter pair satisfies the separation"));
    }
    let interp = curve.interpolant();
    let a0 = spectral::node(n, i);
    let b0 = spectral::node(n, j) + TAU * m as f64;
    let grid = pair_from(&interp, a0, b0);
    let (a, b) = refine_pair(&interp, a0, b0, h);
    let gap = match curve.mode {
        CurveMode::GraphPeriodic => (a - b).abs(),
        CurveMode::Closed => param_distance(a, b),
    };
    let near = (a - a0).abs() <= 2.0 * h && (b - b0).abs() <= 2.0 * h;
    if near && gap >= min_separation {
        let refined = pair_from(&interp, a, b);
        if refined.distance < grid.distance {
            return Ok(refined);
        }
    }
    Ok(grid)
}

/// Refined distances from a tilde curve to the singular points `q⁰…q⁴`.
pub fn singular_distances(curve: &SampledCurve) -> [f64; 5] {
    let n = curve.n();
    let h = TAU / n as f64;
    let pts = curve.points();
    let interp = curve.interpolant();
    let q = conformal::singular_points().points;
    let mut out = [0.0; 5];
    for (l, ql) in q.iter().enumerate() {
        let (j, d) = pts
            .iter()
            .enumerate()
            .map(|(j, p)| (j, (p - ql).norm()))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        let a = spectral::node(n, j);
        let [z, d1, d2] = interp.eval(a);
        let r = z - ql;
        let g = (r.conj() * d1).re;
        let hess = d1.norm_sqr() + (r.conj() * d2).re;
        let mut best = d;
        if hess > 0.0 {
            let step = g / hess;
            if step.abs() <= h {
                best = best.min((interp.point(a - step) - ql).norm());
            }
        }
        out[l] = best;
    }
    out
}

/// Image of a graph-periodic curve under `P`, as a closed curve.
pub fn to_tilde(curve: &SampledCurve, branch: &BranchSpec) -> Result<SampledCurve> {
    if curve.mode != CurveMode::GraphPeriodic {
        return Err(Error::InvalidParameter(
            "tilde transport expects a graph-periodic curve",
        ));
    }
    let zeta = map_points(&curve.points(), branch)?;
    SampledCurve::from_points(CurveMode::Closed, &zeta)
}

fn map_points(points: &[C64], branch: &BranchSpec) -> Result<Vec<C64>> {
    let zeta = points
        .iter()
        .map(|&w| conformal::map_P(w, branch))
        .collect::<Result<Vec<C64>>>()?;
    check_continuity(&zeta)?;
    Ok(zeta)
}

/// A crossing of the square-root cut shows up as a sample closer to the negated
/// previous sample than to the sample itself.
fn check_continuity(zeta: &[C64]) -> Result<()> {
    let n = zeta.len();
    for j in 0..n {
        let prev = zeta[(j + n - 1) % n];
        if (zeta[j] - prev).norm() > (zeta[j] + prev).norm() {
            return Err(Error::BranchCut(j));
        }
    }
    Ok(())
}

/// Pull a closed tilde curve back to a graph-periodic physical curve.
pub fn from_tilde(curve: &SampledCurve, branch: &BranchSpec) -> Result<SampledCurve> {
    if curve.mode != CurveMode::Closed {
        return Err(Error::InvalidParameter("pull-back expects a closed tilde curve"));
    }
    let n = curve.n();
    let mut w = Vec::with_capacity(n);
    for (j, zeta) in curve.points().into_iter().enumerate() {
        let wj = conformal::map_P_inv(zeta)?;
        if let Ok(back) = conformal::map_P(wj, branch) {
            if (back - zeta).norm() > (back + zeta).norm() {
                return Err(Error::BranchCut(j));
            }
        }
        w.push(wj);
    }
    for j in 1..n {
        let step = w[j].re - w[j - 1].re;
        w[j].re -= TAU * (step / TAU).round();
    }
    if (w[0].re + TAU - w[n - 1].re).abs() >= PI {
        return Err(Error::InvalidParameter(
            "tilde curve does not wind once around the strip",
        ));
    }
    let drift = (0..n).map(|j| w[j].re - spectral::node(n, j)).sum::<f64>() / n as f64;
    let shift = TAU * (drift / TAU).round();
    for p in w.iter_mut() {
        p.re -= shift;
    }
    SampledCurve::from_points(CurveMode::GraphPeriodic, &w)
}

/// Image under `P` sampled at equal tilde arclength. Returns the closed tilde curve
/// and the physical parameters of its samples.
pub fn to_tilde_equal_arclength(
    curve: &SampledCurve,
    branch: &BranchSpec,
    n_out: usize,
) -> Result<(SampledCurve, Vec<f64>)> {
    if curve.mode != CurveMode::GraphPeriodic {
        return Err(Error::InvalidParameter(
            "tilde transport expects a graph-periodic curve",
        ));
    }
    spectral::check_size(n_out)?;
    let interp = curve.interpolant();
    let fine = 8 * n_out.max(curve.n());
    let speed = (0..fine)
        .map(|k| {
            let [z, dz, _] = interp.eval(spectral::node(fine, k));
            Ok((conformal::dP_dw(z, branch)? * dz).norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let speed = GridFunction::new(speed)?;
    let mean = speed.mean();
    let running = Spectrum::of_real(spectral::antiderivative(&speed).values());
    let start = running.evaluate(-PI).re;
    let mut alpha = Vec::with_capacity(n_out);
    let mut a = -PI;
    for theta in spectral::nodes(n_out) {
        for _ in 0..50 {
            let [g, dg, _] = running.evaluate_with_derivatives(a);
            let residual = a - theta + (g.re - start) / mean;
            let step = residual * mean / (mean + dg.re);
            a -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        alpha.push(a);
    }
    let zeta = map_points(&alpha.iter().map(|&a| interp.point(a)).collect::<Vec<_>>(), branch)?;
    let tilde = SampledCurve::from_points(CurveMode::Closed, &zeta)?;
    let lengths: Vec<f64> = tilde.tangent().iter().map(|t| t.norm()).collect();
    let avg = lengths.iter().sum::<f64>() / n_out as f64;
    if !(lengths.iter().all(|l| (l - avg).abs() < 1e-6 * avg)) {
        return Err(Error::Construction(
            "tilde image is under-resolved at this sample count",
        ));
    }
    Ok((tilde, alpha))
}

/// Shape parameters of the splash family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplashCurveParams {
    /// Horizontal gap between the two lobes at closest approach; 0 is the exact splash.
    pub neck_width: f64,
    /// Angle from the vertical at which each lobe leaves the bubble, in radians.
    pub opening_angle: f64,
    /// Depth of the far trough below the axis.
    pub depth: f64,
    /// Amplitude of an odd vertical tilt.
    pub asymmetry: f64,
}

impl Default for SplashCurveParams {
    fn default() -> Self {
        SplashCurveParams {
            neck_width: 0.05,
            opening_angle: 0.8,
            depth: 0.6,
            asymmetry: 0.0,
        }
    }
}

impl SplashCurveParams {
    /// Nominal contact point of the family, where the lobes meet at neck width 0.
    pub fn contact_point(&self) -> C64 {
        C64::new(0.0, SHAPE.contact_height)
    }
}

/// Fixed geometry of the family: bubble centre height, contact height, lobe-top radius.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SplashShape {
    pub bubble_center: f64,
    pub contact_height: f64,
    pub lobe_radius: f64,
}

pub(crate) const SHAPE: SplashShape = SplashShape {
    bubble_center: -0.1,
    contact_height: 0.6,
    lobe_radius: 0.8,
};
const FIT_MODES: usize = 16;
const FIT_RIDGE: f64 = 1e-7;
const HALF_SAMPLES: usize = 4001;

#[derive(Debug, Clone, Copy)]
struct Arc {
    center: C64,
    radius: f64,
    start: f64,
    end: f64,
}

impl Arc {
    fn length(&self) -> f64 {
        self.radius * (self.end - self.start).abs()
    }

    fn at(&self, f: f64) -> C64 {
        self.center + C64::from_polar(self.radius, self.start + f * (self.end - self.start))
    }
}

/// Right half of the exact splash: bubble, lobe underside up to the contact, lobe top
/// and trough, all circular arcs joined with matching tangents.
fn splash_arcs(opening_angle: f64, depth: f64, shape: &SplashShape) -> Result<[Arc; 4]> {
    if !(opening_angle > 0.0 && opening_angle < PI / 2.0) {
        return Err(Error::InvalidParameter("opening angle must lie in (0, π/2)"));
    }
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(Error::InvalidParameter("depth must be positive"));
    }
    let rise = shape.contact_height - shape.bubble_center;
    let junction = PI / 2.0 - opening_angle;
    let r0 = rise * (junction / 2.0).tan();
    let r1 = (rise * rise - r0 * r0) / (2.0 * r0);
    let r2 = shape.lobe_radius;
    let c0 = C64::new(0.0, shape.bubble_center);
    let c1 = C64::new(r1, shape.contact_height);
    let c2 = C64::new(r2, shape.contact_height);
    let drop = shape.contact_height + depth;
    let rt = ((PI - r2).powi(2) + drop * drop - r2 * r2) / (2.0 * (drop + r2));
    let c3 = C64::new(PI, -depth + rt);
    let phi1 = (c1 - c0).arg();
    let phi3 = (c2 - c3).arg();
    let top_end = if phi3 > 0.0 { phi3 - PI } else { phi3 + PI };
    Ok([
        Arc {
            center: c0,
            radius: r0,
            start: -PI / 2.0,
            end: phi1,
        },
        Arc {
            center: c1,
            radius: r1,
            start: phi1 + PI,
            end: PI,
        },
        Arc {
            center: c2,
            radius: r2,
            start: PI,
            end: top_end,
        },
        Arc {
            center: c3,
            radius: rt,
            start: phi3,
            end: -PI / 2.0,
        },
    ])
}

/// `z₁ = α + Σ (a_k sin kα + a'_k cos kα)`, `z₂ = b₀ + Σ (b_k cos kα + b'_k sin kα)`.
#[derive(Debug, Clone)]
struct TrigCurve {
    a_sin: Vec<f64>,
    a_cos: Vec<f64>,
    b0: f64,
    b_cos: Vec<f64>,
    b_sin: Vec<f64>,
}

impl TrigCurve {
    fn eval(&self, alpha: f64) -> (C64, C64) {
        let mut z = C64::new(alpha, self.b0);
        let mut dz = C64::new(1.0, 0.0);
        for k in 1..=self.a_sin.len() {
            let kf = k as f64;
            let (s, c) = (kf * alpha).sin_cos();
            let i = k - 1;
            z.re += self.a_sin[i] * s + self.a_cos[i] * c;
            z.im += self.b_cos[i] * c + self.b_sin[i] * s;
            dz.re += kf * (self.a_sin[i] * c - self.a_cos[i] * s);
            dz.im += kf * (self.b_sin[i] * c - self.b_cos[i] * s);
        }
        (z, dz)
    }

    /// Minimal `Σ k⁴|δ|²` correction imposing vertical tangents at `±a`, a horizontal
    /// gap `neck` between `z(a)` and `z(-a)`, and equal heights there.
    fn impose_contact(&mut self, a: f64, neck: f64) -> Result<()> {
        let k_max = self.a_sin.len();
        let dim = 4 * k_max;
        let mut rows = vec![0.0; 4 * dim];
        for k in 1..=k_max {
            let kf = k as f64;
            let (s, c) = (kf * a).sin_cos();
            let i = k - 1;
            // Unknown layout: [a_sin | a_cos | b_cos | b_sin].
            rows[i] = kf * c;
            rows[k_max + i] = -kf * s;
            rows[dim + i] = kf * c;
            rows[dim + k_max + i] = kf * s;
            rows[2 * dim + i] = 2.0 * s;
            rows[3 * dim + 3 * k_max + i] = 2.0 * s;
        }
        let (zp, dp) = self.eval(a);
        let (zm, dm) = self.eval(-a);
        let rhs = [-dp.re, -dm.re, neck - (zp.re - zm.re), -(zp.im - zm.im)];
        let weight = |idx: usize| {
            let k = (idx % k_max + 1) as f64;
            1.0 / (k * k * k * k)
        };
        let mut gram = vec![0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                gram[r * 4 + c] = (0..dim)
                    .map(|q| rows[r * dim + q] * rows[c * dim + q] * weight(q))
                    .sum();
            }
        }
        let mult =
            linalg::solve(gram, rhs.to_vec()).ok_or(Error::Construction("contact constraints are degenerate"))?;
        for q in 0..dim {
            let delta = weight(q) * (0..4).map(|r| rows[r * dim + q] * mult[r]).sum::<f64>();
            let i = q % k_max;
            match q / k_max {
                0 => self.a_sin[i] += delta,
                1 => self.a_cos[i] += delta,
                2 => self.b_cos[i] += delta,
                _ => self.b_sin[i] += delta,
            }
        }
        Ok(())
    }
}

/// Least-squares trigonometric fit of the exact splash, with the contact constraints
/// imposed exactly. Returns the fitted curve and the contact parameter.
fn fit_splash(opening_angle: f64, depth: f64, shape: &SplashShape) -> Result<(TrigCurve, f64)> {
    let arcs = splash_arcs(opening_angle, depth, shape)?;
    let lengths: Vec<f64> = arcs.iter().map(|a| a.length()).collect();
    let total: f64 = lengths.iter().sum();
    let contact = PI * (lengths[0] + lengths[1]) / total;
    let m = HALF_SAMPLES;
    let mut half = Vec::with_capacity(m);
    let mut idx = 0;
    let mut start = 0.0;
    for i in 0..m {
        let s = total * i as f64 / (m - 1) as f64;
        while idx + 1 < arcs.len() && s > start + lengths[idx] {
            start += lengths[idx];
            idx += 1;
        }
        let f = ((s - start) / lengths[idx]).clamp(0.0, 1.0);
        half.push((PI * s / total, arcs[idx].at(f)));
    }
    let mut samples: Vec<(f64, C64)> = Vec::with_capacity(2 * m);
    for &(a, p) in half[1..].iter().rev() {
        samples.push((-a, C64::new(-p.re, p.im)));
    }
    samples.extend_from_slice(&half[..m - 1]);

    let k_max = FIT_MODES;
    let ridge = |k: usize| FIT_RIDGE * (k as f64).powi(4);
    // Odd part: normal equations bordered by the two contact constraints.
    let dim = k_max + 2;
    let mut kkt = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    for &(a, p) in &samples {
        let basis: Vec<f64> = (1..=k_max).map(|k| (k as f64 * a).sin()).collect();
        for r in 0..k_max {
            rhs[r] += basis[r] * (p.re - a);
            for c in 0..k_max {
                kkt[r * dim + c] += basis[r] * basis[c];
            }
        }
    }
    for k in 1..=k_max {
        let i = k - 1;
        kkt[i * dim + i] += ridge(k);
        let (s, c) = (k as f64 * contact).sin_cos();
        for (row, v) in [(k_max, s), (k_max + 1, k as f64 * c)] {
            kkt[row * dim + i] = v;
            kkt[i * dim + row] = v;
        }
    }
    rhs[k_max] = -contact;
    rhs[k_max + 1] = -1.0;
    let a_sin = linalg::solve(kkt, rhs).ok_or(Error::Construction("odd fit is singular"))?;

    let dim = k_max + 1;
    let mut normal = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    for &(a, p) in &samples {
        let basis: Vec<f64> = (0..=k_max).map(|k| (k as f64 * a).cos()).collect();
        for r in 0..dim {
            rhs[r] += basis[r] * p.im;
            for c in 0..dim {
                normal[r * dim + c] += basis[r] * basis[c];
            }
        }
    }
    for k in 1..=k_max {
        normal[k * dim + k] += ridge(k);
    }
    let b = linalg::solve(normal, rhs).ok_or(Error::Construction("even fit is singular"))?;
    Ok((
        TrigCurve {
            a_sin: a_sin[..k_max].to_vec(),
            a_cos: vec![0.0; k_max],
            b0: b[0],
            b_cos: b[1..].to_vec(),
            b_sin: vec![0.0; k_max],
        },
        contact,
    ))
}

/// Build a member of the splash family sampled at `n` nodes (`n ≥ 64`).
pub fn make_splash_curve(params: &SplashCurveParams, n: usize) -> Result<SampledCurve> {
    splash_curve_with_shape(params, n, &SHAPE)
}

fn splash_curve_with_shape(params: &SplashCurveParams, n: usize, shape: &SplashShape) -> Result<SampledCurve> {
    spectral::check_size(n)?;
    if n < 4 * FIT_MODES {
        return Err(Error::InvalidParameter("splash curves need n >= 64"));
    }
    if !(params.neck_width.is_finite() && params.asymmetry.is_finite()) {
        return Err(Error::InvalidParameter("splash parameters must be finite"));
    }
    if params.neck_width < 0.0 {
        return Err(Error::Construction("negative neck width makes the lobes cross"));
    }
    let (mut trig, contact) = fit_splash(params.opening_angle, params.depth, shape)?;
    trig.b_sin[0] += 0.5 * params.asymmetry;
    trig.b_sin[1] += 0.25 * params.asymmetry;
    trig.impose_contact(contact, params.neck_width)?;
    let pts: Vec<C64> = spectral::nodes(n).into_iter().map(|a| trig.eval(a).0).collect();
    let curve = SampledCurve::from_points(CurveMode::GraphPeriodic, &pts)?;
    if first_crossing(&curve).is_some() {
        return Err(Error::Construction("branches of the curve cross"));
    }
    Ok(curve)
}

fn segments_cross(p1: C64, p2: C64, q1: C64, q2: C64) -> bool {
    let cross = |a: C64, b: C64| a.re * b.im - a.im * b.re;
    let d1 = cross(p2 - p1, q1 - p1);
    let d2 = cross(p2 - p1, q2 - p1);
    let d3 = cross(q2 - q1, p1 - q1);
    let d4 = cross(q2 - q1, p2 - q1);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// First polygon edge that properly crosses another (including period images).
pub fn first_crossing(curve: &SampledCurve) -> Option<usize> {
    let n = curve.n();
    let pts = curve.points();
    let period = match curve.mode {
        CurveMode::GraphPeriodic => C64::new(TAU, 0.0),
        CurveMode::Closed => C64::new(0.0, 0.0),
    };
    let end = |j: usize| {
        if j + 1 < n {
            pts[j + 1]
        } else {
            pts[0] + period
        }
    };
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            for &m in image_shifts(curve.mode) {
                let s = period * m as f64;
                if segments_cross(pts[i], end(i), pts[j] + s, end(j) + s) {
                    return Some(i);
                }
            }
        }
    }
    None
}

/// One reason a curve fails to be an admissible splash curve.
#[derive(Debug, Clone, PartialEq)]
pub enum SplashFailure {
    NoSelfContact,
    MultipleContacts(usize),
    Tangency { alpha1: f64, alpha2: f64 },
    DegenerateTangent(usize),
    TildeMap(Error),
    SingularPoint { index: usize, distance: f64 },
    TildeNotInjective(f64),
}

impl fmt::Display for SplashFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplashFailure::NoSelfContact => write!(f, "no self-contact"),
            SplashFailure::MultipleContacts(k) => write!(f, "{k} self-contacts"),
            SplashFailure::Tangency { alpha1, alpha2 } => {
                write!(f, "contact at ({alpha1}, {alpha2}) is not tangential")
            }
            SplashFailure::DegenerateTangent(j) => write!(f, "degenerate tangent at sample {j}"),
            SplashFailure::TildeMap(e) => write!(f, "tilde map failed: {e}"),
            SplashFailure::SingularPoint { index, distance } => {
                write!(f, "tilde curve within {distance:e} of q{index}")
            }
            SplashFailure::TildeNotInjective(c) => {
                write!(f, "tilde curve is not injective (chord-arc {c:e})")
            }
        }
    }
}

/// Outcome of splash validation or of monitoring a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SplashReport {
    pub alpha1: f64,
    pub alpha2: f64,
    pub x_s: C64,
    pub is_splash: bool,
    pub failures: Vec<SplashFailure>,
    /// Extrapolated splash time, when monitoring a run.
    pub t_s: Option<f64>,
    pub low_confidence: bool,
}

/// Refined self-contacts: pairs of distinct, well separated parameters whose points
/// coincide to `CONTACT_TOLERANCE`. Also returns the closest refined pair.
fn self_contacts(curve: &SampledCurve) -> (Vec<ClosestPair>, Option<ClosestPair>) {
    let n = curve.n();
    let h = TAU / n as f64;
    let min_gap = (8.0 * h).min(1.0);
    let pts = curve.points();
    let speed = curve.tangent().iter().fold(0.0f64, |m, t| m.max(t.norm()));
    let reach = 2.0 * h * speed;
    let interp = curve.interpolant();
    let period = match curve.mode {
        CurveMode::GraphPeriodic => C64::new(TAU, 0.0),
        CurveMode::Closed => C64::new(0.0, 0.0),
    };
    let nn = n as isize;
    let unrolled = |k: isize| pts[k.rem_euclid(nn) as usize] + period * k.div_euclid(nn) as f64;
    let mut contacts: Vec<ClosestPair> = Vec::new();
    let mut closest: Option<ClosestPair> = None;
    for i in 0..n {
        for j in i + 1..n {
            for &m in image_shifts(curve.mode) {
                let (d, gap) = chord(curve, &pts, i, j, m);
                if gap < min_gap || d > reach {
                    continue;
                }
                let (ii, jj) = (i as isize, j as isize + m as isize * nn);
                let local_min = [(-1, 0), (1, 0), (0, -1), (0, 1), (1, 1), (-1, -1), (1, -1), (-1, 1)]
                    .iter()
                    .all(|&(di, dj)| (unrolled(ii + di) - unrolled(jj + dj)).norm() >= d);
                if !local_min {
                    continue;
                }
                let a0 = spectral::node(n, i);
                let b0 = spectral::node(n, j) + TAU * m as f64;
                let (a, b) = refine_pair(&interp, a0, b0, h);
                let pair = if (a - a0).abs() <= 2.0 * h && (b - b0).abs() <= 2.0 * h {
                    pair_from(&interp, a, b)
                } else {
                    pair_from(&interp, a0, b0)
                };
                if closest.is_none_or(|c| pair.distance < c.distance) {
                    closest = Some(pair);
                }
                if pair.distance < CONTACT_TOLERANCE
                    && !contacts.iter().any(|c| {
                        param_distance(c.alpha1, pair.alpha1) < 2.0 * h
                            && param_distance(c.alpha2, pair.alpha2) < 2.0 * h
                    })
                {
                    contacts.push(pair);
                }
            }
        }
    }
    (contacts, closest)
}

/// Check the splash-curve conditions: a single tangential self-contact, a regular
/// parameterization, and an injective tilde image clear of the singular points.
pub fn validate_splash_curve(curve: &SampledCurve, branch: &BranchSpec) -> SplashReport {
    let mut failures = Vec::new();
    let speed: Vec<f64> = curve.tangent().iter().map(|t| t.norm()).collect();
    let top = speed.iter().fold(0.0f64, |m, &s| m.max(s));
    if let Some(j) = speed.iter().position(|&s| !(s > 1e-10 * top)) {
        failures.push(SplashFailure::DegenerateTangent(j));
    }
    let (contacts, closest) = self_contacts(curve);
    let pair = contacts.first().copied().or(closest);
    match contacts.len() {
        0 => failures.push(SplashFailure::NoSelfContact),
        1 => {
            let c = contacts[0];
            let interp = curve.interpolant();
            let t1 = interp.tangent(c.alpha1);
            let t2 = interp.tangent(c.alpha2);
            let vertical = t1.re.abs() < TANGENCY_TOLERANCE && t2.re.abs() < TANGENCY_TOLERANCE;
            let mirrored = (t1.re / t1.norm() + t2.re / t2.norm()).abs() < TANGENCY_TOLERANCE;
            if !(vertical || mirrored) {
                failures.push(SplashFailure::Tangency {
                    alpha1: c.alpha1,
                    alpha2: c.alpha2,
                });
            }
        }
        k => failures.push(SplashFailure::MultipleContacts(k)),
    }
    match to_tilde(curve, branch) {
        Err(e) => failures.push(SplashFailure::TildeMap(e)),
        Ok(tilde) => {
            for (index, &distance) in singular_distances(&tilde).iter().enumerate() {
                if distance <= SINGULAR_CLEARANCE {
                    failures.push(SplashFailure::SingularPoint { index, distance });
                }
            }
            let c = chord_arc_constant(&tilde);
            if !(c > CONTACT_TOLERANCE) {
                failures.push(SplashFailure::TildeNotInjective(c));
            }
        }
    }
    let (alpha1, alpha2, x_s) = match pair {
        Some(p) => (p.alpha1, p.alpha2, 0.5 * (p.point1 + p.point2)),
        None => (f64::NAN, f64::NAN, C64::new(f64::NAN, f64::NAN)),
    };
    SplashReport {
        alpha1,
        alpha2,
        x_s,
        is_splash: failures.is_empty(),
        failures,
        t_s: None,
        low_confidence: false,
    }
}
