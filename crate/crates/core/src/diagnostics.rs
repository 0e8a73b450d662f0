//! Measured functionals: Rayleigh–Taylor stability, the energy `E₃`, splash
//! monitoring and the distances used by the stability experiment.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::birkhoff_rott::{self, FluidParams, VorticityAmplitude};
use crate::conformal::{self, BranchSpec};
use crate::contour::{self, ClosestPair, CurveMode, SampledCurve, SplashReport};
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{self, GridFunction, C64};

/// Threshold on `min σ / ρ₀` for reporting the stable regime.
pub const STABLE_SIGMA: f64 = 1e-6;
/// Number of trailing records used for the splash-time extrapolation.
pub const SPLASH_FIT_POINTS: usize = 5;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `σ = μ₀ BR·z_α^⊥ + ρ₀ ∂_α z₁` with `z_α^⊥ = (-∂_α z₂, ∂_α z₁)`.
pub fn rayleigh_taylor_physical(
    curve: &SampledCurve,
    omega: &VorticityAmplitude,
    params: &FluidParams,
) -> Result<GridFunction> {
    let br = birkhoff_rott::br_eval(curve, omega)?;
    sigma_from(&br, &curve.tangent(), params)
}

/// Physical `σ` from a precomputed `BR`.
pub fn sigma_from(br: &[C64], tangent: &[C64], params: &FluidParams) -> Result<GridFunction> {
    GridFunction::new(
        br.iter()
            .zip(tangent)
            .map(|(b, t)| params.mu0 * dot(*b, I * t) + params.rho0 * t.re)
            .collect(),
    )
}

/// Tilde `σ̃ = μ₀ BR(z̃,ω̃)·z̃_α^⊥ + ρ₀ ∇P₂⁻¹(z̃)·z̃_α^⊥`, together with `min Q²σ̃`.
pub fn rayleigh_taylor_tilde(
    curve: &SampledCurve,
    omega: &VorticityAmplitude,
    params: &FluidParams,
) -> Result<(GridFunction, f64)> {
    let br = birkhoff_rott::br_eval(curve, omega)?;
    sigma_tilde_from(curve, &br, params)
}

/// Tilde `σ̃` and `min Q²σ̃` from a precomputed `BR`.
pub fn sigma_tilde_from(curve: &SampledCurve, br: &[C64], params: &FluidParams) -> Result<(GridFunction, f64)> {
    let mut sigma = Vec::with_capacity(curve.n());
    let mut min_q = f64::INFINITY;
    for ((zeta, t), b) in curve.points().into_iter().zip(curve.tangent()).zip(br) {
        let g = conformal::grad_P2_inv(zeta)?;
        let normal = I * t;
        let s = params.mu0 * dot(*b, normal) + params.rho0 * (g[0] * normal.re + g[1] * normal.im);
        min_q = min_q.min(conformal::q_factor_at(zeta, &BranchSpec::principal())? * s);
        sigma.push(s);
    }
    Ok((GridFunction::new(sigma)?, min_q))
}

fn dot(a: C64, b: C64) -> f64 {
    a.re * b.re + a.im * b.im
}

/// The terms of `E₃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// `‖z‖²_{H³}` summed over both components.
    pub h3_sq: f64,
    /// `‖F(z)‖²_{L^∞}`.
    pub f_sup_sq: f64,
    /// `1/m(Q²σ)`; `1/m(σ)` for physical curves.
    pub inv_m_sigma: f64,
    /// `1/m(qˡ)` for `l = 0…4`; zero for physical curves.
    pub inv_m_q: [f64; 5],
}

impl EnergyParts {
    pub fn sum(&self) -> f64 {
        self.h3_sq + self.f_sup_sq + self.inv_m_sigma + self.inv_m_q.iter().sum::<f64>()
    }
}

/// `E₃` with its parts. When a part is infinite or a minimum is nonpositive the energy
/// is `+∞` and `violation` names the offending part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub e3: f64,
    pub parts: EnergyParts,
    pub violation: Option<&'static str>,
    /// `min Q²σ̃` (tilde) or `min σ` (physical), when it was computed.
    pub sigma_min: f64,
}

const Q_NAMES: [&str; 5] = ["m(q0)", "m(q1)", "m(q2)", "m(q3)", "m(q4)"];

/// `‖z‖²_{H³}` over the periodic parts of both components.
pub fn h3_norm_sq(curve: &SampledCurve) -> Result<f64> {
    let off = curve.offsets();
    let x = GridFunction::new(off.iter().map(|p| p.re).collect())?;
    let y = GridFunction::new(off.iter().map(|p| p.im).collect())?;
    Ok(spectral::sobolev_norm(&x, 3).powi(2) + spectral::sobolev_norm(&y, 3).powi(2))
}

/// Geometric parts of `E₃` for a tilde curve; the `σ` part is left at zero.
fn geometric_parts(curve: &SampledCurve, tilde: bool) -> Result<(EnergyParts, Option<&'static str>)> {
    let mut parts = EnergyParts {
        h3_sq: h3_norm_sq(curve)?,
        f_sup_sq: contour::f_functional(curve).powi(2),
        inv_m_sigma: 0.0,
        inv_m_q: [0.0; 5],
    };
    let mut violation = None;
    if tilde {
        for (l, d) in contour::singular_distances(curve).iter().enumerate() {
            if !(*d > conformal::SINGULAR_TOLERANCE) {
                parts.inv_m_q[l] = f64::INFINITY;
                violation = violation.or(Some(Q_NAMES[l]));
            } else {
                parts.inv_m_q[l] = 1.0 / d;
            }
        }
    }
    if !parts.f_sup_sq.is_finite() {
        violation = violation.or(Some("F"));
    }
    Ok((parts, violation))
}

/// `E₃` of a state. The `σ` term is skipped when `BR` cannot be evaluated.
pub fn energy_e3(curve: &SampledCurve, omega: &VorticityAmplitude, params: &FluidParams) -> Result<Energy> {
    let br = birkhoff_rott::br_eval(curve, omega).ok();
    energy_with_br(curve, br.as_deref(), params)
}

/// `E₃` from a precomputed `BR`, or with only the geometric parts when `br` is `None`.
/// Closed curves are treated as tilde curves and graphs as physical curves.
pub fn energy_with_br(curve: &SampledCurve, br: Option<&[C64]>, params: &FluidParams) -> Result<Energy> {
    let tilde = curve.mode() == CurveMode::Closed;
    let (mut parts, mut violation) = geometric_parts(curve, tilde)?;
    let mut sigma_min = f64::NAN;
    if violation.is_none() {
        if let Some(br) = br {
            sigma_min = if tilde {
                sigma_tilde_from(curve, br, params)?.1
            } else {
                sigma_from(br, &curve.tangent(), params)?
                    .values()
                    .iter()
                    .fold(f64::INFINITY, |m, &s| m.min(s))
            };
            if sigma_min > 0.0 {
                parts.inv_m_sigma = 1.0 / sigma_min;
            } else {
                parts.inv_m_sigma = f64::INFINITY;
                violation = Some("m(Q²σ)");
            }
        }
    }
    let e3 = if violation.is_some() {
        f64::INFINITY
    } else {
        parts.sum()
    };
    Ok(Energy {
        e3,
        parts,
        violation,
        sigma_min,
    })
}

/// One row of the diagnostics series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e3: f64,
    pub parts: EnergyParts,
    pub violation: Option<&'static str>,
    pub sigma_min: f64,
    /// Chord-arc constant of the physical curve.
    pub chord_arc: f64,
    /// Interface minimum distance of the physical curve.
    pub min_dist: f64,
    pub closest: Option<ClosestPair>,
    pub mean_omega: f64,
    pub dt: f64,
    /// `std(|z_α|)/mean(|z_α|)` of the evolved curve.
    pub arclength_spread: f64,
}

/// `std(|z_α|)/mean(|z_α|)`.
pub fn arclength_spread(curve: &SampledCurve) -> f64 {
    let speed: Vec<f64> = curve.tangent().iter().map(|t| t.norm()).collect();
    let n = speed.len() as f64;
    let mean = speed.iter().sum::<f64>() / n;
    let var = speed.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// `‖x − y‖_{H¹}` over both components of the difference.
pub fn h1_distance(x: &SampledCurve, y: &SampledCurve) -> Result<f64> {
    if x.n() != y.n() {
        return Err(Error::LengthMismatch(x.n(), y.n()));
    }
    if x.mode() != y.mode() {
        return Err(Error::InvalidParameter("curves differ in mode"));
    }
    let dx: Vec<f64> = x.x().values().iter().zip(y.x().values()).map(|(a, b)| a - b).collect();
    let dy: Vec<f64> = x.y().values().iter().zip(y.y().values()).map(|(a, b)| a - b).collect();
    let a = spectral::sobolev_norm(&GridFunction::new(dx)?, 1);
    let b = spectral::sobolev_norm(&GridFunction::new(dy)?, 1);
    Ok(a.hypot(b))
}

/// One row of the stability experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRecord {
    pub t: f64,
    pub h1_dist: f64,
    /// `(log h1_dist(t) − log h1_dist(0)) / t`, zero at `t = 0`.
    pub growth_exponent: f64,
}

impl StabilityRecord {
    pub fn new(t: f64, h1_dist: f64, initial: f64) -> Self {
        let growth_exponent = if t > 0.0 && h1_dist > 0.0 && initial > 0.0 {
            (h1_dist / initial).ln() / t
        } else {
            0.0
        };
        StabilityRecord {
            t,
            h1_dist,
            growth_exponent,
        }
    }
}

/// Least-squares slope of `log a` against `t`.
pub fn decay_rate_fit(series: &[(f64, f64)]) -> Result<f64> {
    if series.len() < 10 {
        return Err(Error::InvalidParameter("decay fit needs at least 10 points"));
    }
    if series
        .iter()
        .any(|&(t, a)| !(a > 0.0) || !t.is_finite() || !a.is_finite())
    {
        return Err(Error::InvalidParameter("decay fit needs positive finite amplitudes"));
    }
    let n = series.len() as f64;
    let tm = series.iter().map(|p| p.0).sum::<f64>() / n;
    let lm = series.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for &(t, a) in series {
        num += (t - tm) * (a.ln() - lm);
        den += (t - tm) * (t - tm);
    }
    if !(den > 0.0) {
        return Err(Error::InvalidParameter("decay fit needs distinct times"));
    }
    Ok(num / den)
}

/// Splash time from the trailing `(t, d)` records: the first root after the last sample
/// of the least-squares quadratic through the final five points. The flag is set
/// when the fit residual exceeds 1% of the range of `d` or the tail is not decreasing.
pub fn extrapolate_splash_time(series: &[(f64, f64)]) -> Option<(f64, bool)> {
    if series.len() < 3 {
        return None;
    }
    let tail = &series[series.len().saturating_sub(SPLASH_FIT_POINTS)..];
    let (t0, t_last) = (tail[0].0, tail[tail.len() - 1].0);
    let scale = (t_last - t0).max(f64::MIN_POSITIVE);
    let mut normal = [0.0; 9];
    let mut rhs = [0.0; 3];
    for &(t, d) in tail {
        let s = (t - t_last) / scale;
        let basis = [1.0, s, s * s];
        for a in 0..3 {
            rhs[a] += basis[a] * d;
            for b in 0..3 {
                normal[3 * a + b] += basis[a] * basis[b];
            }
        }
    }
    let c = linalg::solve(normal.to_vec(), rhs.to_vec())?;
    let fit = |s: f64| c[0] + c[1] * s + c[2] * s * s;
    let d_max = tail.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.1));
    let d_min = tail.iter().fold(f64::INFINITY, |m, p| m.min(p.1));
    let residual = tail
        .iter()
        .map(|&(t, d)| (fit((t - t_last) / scale) - d).abs())
        .fold(0.0f64, f64::max);
    let decreasing = tail.windows(2).all(|w| w[1].1 < w[0].1);
    let low = residual > 0.01 * (d_max - d_min) || !decreasing;
    let root = if c[2].abs() <= 1e-14 * (c[0].abs() + c[1].abs()) {
        (c[1] != 0.0).then(|| -c[0] / c[1]).filter(|s| *s >= 0.0)
    } else {
        let disc = c[1] * c[1] - 4.0 * c[2] * c[0];
        if disc < 0.0 {
            None
        } else {
            let sq = disc.sqrt();
            let q = -0.5 * (c[1] + c[1].signum() * sq);
            let mut roots = [q / c[2], if q != 0.0 { c[0] / q } else { f64::NAN }];
            roots.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
            roots.into_iter().find(|s| *s >= -1e-12)
        }
    };
    let s = match root {
        Some(s) => s,
        None => {
            let (ta, da) = tail[tail.len() - 2];
            let (tb, db) = tail[tail.len() - 1];
            if !(db < da) {
                return None;
            }
            return Some((tb + db * (tb - ta) / (da - db), true));
        }
    };
    Some((t_last + s * scale, low))
}

/// Splash report for a finished run: `min_dist` series, the final minimizing pair and
/// whether the run stopped on the splash distance.
pub fn splash_monitor(series: &[(f64, f64)], last_pair: Option<&ClosestPair>, stopped_on_splash: bool) -> SplashReport {
    let (alpha1, alpha2, x_s) = match last_pair {
        Some(p) => (p.alpha1, p.alpha2, 0.5 * (p.point1 + p.point2)),
        None => (f64::NAN, f64::NAN, C64::new(f64::NAN, f64::NAN)),
    };
    let mut report = SplashReport {
        alpha1,
        alpha2,
        x_s,
        is_splash: false,
        failures: Vec::new(),
        t_s: None,
        low_confidence: false,
    };
    if stopped_on_splash {
        if let Some((t_s, low)) = extrapolate_splash_time(series) {
            report.is_splash = true;
            report.t_s = Some(t_s);
            report.low_confidence = low;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birkhoff_rott::{solve_omega, Domain, SolverSettings};
    use alloc::vec;
    use core::f64::consts::PI;

    #[test]
    fn flat_graph_is_hydrostatic() {
        let c = SampledCurve::flat(64).unwrap();
        let w = GridFunction::zeros(64).unwrap();
        let p = FluidParams::new(2.5, 1.0).unwrap();
        let s = rayleigh_taylor_physical(&c, &w, &p).unwrap();
        assert!(s.values().iter().all(|v| (v - 2.5).abs() < 1e-14));
    }

    #[test]
    fn sigma_drops_the_tangential_velocity() {
        let c = SampledCurve::from_fn(CurveMode::GraphPeriodic, 64, |a| C64::new(a, 0.3 * a.cos())).unwrap();
        let p = FluidParams::new(1.0, 0.7).unwrap();
        let sol = solve_omega(&c, &p, Domain::Physical, None, &SolverSettings::default()).unwrap();
        let s = rayleigh_taylor_physical(&c, &sol.omega, &p).unwrap();
        let u = birkhoff_rott::surface_velocity(&c, &sol.omega).unwrap();
        for ((u, t), s) in u.iter().zip(c.tangent()).zip(s.values()) {
            let alt = p.mu0 * dot(*u, I * t) + p.rho0 * t.re;
            assert!((alt - s).abs() < 1e-12);
        }
    }

    #[test]
    fn tilde_sigma_without_vorticity_is_the_gravity_term() {
        let c = SampledCurve::circle(64, C64::new(0.0, 0.0), 0.5).unwrap();
        let w = GridFunction::zeros(64).unwrap();
        let (s, _) = rayleigh_taylor_tilde(&c, &w, &FluidParams::default()).unwrap();
        for (zeta, (t, s)) in c.points().iter().zip(c.tangent().iter().zip(s.values())) {
            let g = conformal::dP_inv(*zeta).unwrap();
            assert!((s - (g * t).re).abs() < 1e-14);
        }
    }

    #[test]
    fn energy_examples() {
        let c3 = SampledCurve::circle(128, C64::new(0.0, 0.0), 3.0).unwrap();
        let (parts, v) = geometric_parts(&c3, true).unwrap();
        assert!(v.is_none());
        assert!((1.0 / parts.inv_m_q[1] - 2.0).abs() < 1e-12);
        let c1 = SampledCurve::circle(128, C64::new(0.0, 0.0), 1.0).unwrap();
        let f = contour::f_functional(&c1).powi(2);
        assert!((f - (PI / 2.0).powi(2)).abs() < 1e-10);
        let through = SampledCurve::circle(64, C64::new(0.3, 0.0), 0.3).unwrap();
        let w = GridFunction::zeros(64).unwrap();
        let e = energy_e3(&through, &w, &FluidParams::default()).unwrap();
        assert_eq!(e.violation, Some("m(q0)"));
        assert!(e.e3.is_infinite());
    }

    #[test]
    fn energy_is_the_sum_of_its_parts() {
        let c = SampledCurve::circle(64, C64::new(0.1, 0.05), 0.5).unwrap();
        let p = FluidParams::default();
        let sol = solve_omega(&c, &p, Domain::Tilde, None, &SolverSettings::default()).unwrap();
        let e = energy_e3(&c, &sol.omega, &p).unwrap();
        if e.violation.is_none() {
            assert!((e.e3 - e.parts.sum()).abs() <= 1e-12 * e.e3);
        }
        assert!((1.0 / e.parts.inv_m_q[0] - 0.5).abs() < 0.12);
    }

    #[test]
    fn h1_distance_examples() {
        let n = 64;
        let eps = 1e-3;
        let a = SampledCurve::flat(n).unwrap();
        let b = SampledCurve::from_fn(CurveMode::GraphPeriodic, n, |t| C64::new(t + eps * t.cos(), 0.0)).unwrap();
        assert_eq!(h1_distance(&a, &a).unwrap(), 0.0);
        let d = h1_distance(&a, &b).unwrap();
        assert!((d - eps * (2.0 * PI).sqrt()).abs() < 1e-15);
        let c = SampledCurve::circle(n, C64::new(0.0, 0.0), 1.0).unwrap();
        assert!(h1_distance(&a, &c).is_err());
    }

    #[test]
    fn decay_fit_examples() {
        let exact: Vec<(f64, f64)> = (0..20).map(|k| (0.05 * k as f64, (-0.1 * k as f64).exp())).collect();
        assert!((decay_rate_fit(&exact).unwrap() + 2.0).abs() < 1e-10);
        let flat: Vec<(f64, f64)> = (0..20).map(|k| (k as f64, 3.0)).collect();
        assert!(decay_rate_fit(&flat).unwrap().abs() < 1e-15);
        let wavy: Vec<(f64, f64)> = (0..200)
            .map(|k| {
                let t = 0.01 * k as f64;
                (t, (-2.0 * t).exp() * (1.0 + 0.01 * (40.0 * t).sin()))
            })
            .collect();
        assert!((decay_rate_fit(&wavy).unwrap() + 2.0).abs() < 0.01);
        assert!(decay_rate_fit(&exact[..5]).is_err());
        let mut bad = exact.clone();
        bad[3].1 = 0.0;
        assert!(decay_rate_fit(&bad).is_err());
    }

    #[test]
    fn linear_series_extrapolates_exactly() {
        let series: Vec<(f64, f64)> = (0..5).map(|k| 0.9 + 0.02 * k as f64).map(|t| (t, 1.0 - t)).collect();
        let (t_s, low) = extrapolate_splash_time(&series).unwrap();
        assert!((t_s - 1.0).abs() < 1e-6);
        assert!(!low);
        let quad: Vec<(f64, f64)> = (0..8)
            .map(|k| 0.1 * k as f64)
            .map(|t| (t, (1.0 - t).powi(2) + 0.2 * (1.0 - t)))
            .collect();
        let (t_s, _) = extrapolate_splash_time(&quad).unwrap();
        assert!((t_s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn monitor_reports_no_splash_without_stop() {
        let series = vec![(0.0, 1.0), (0.1, 1.0), (0.2, 1.0)];
        let r = splash_monitor(&series, None, false);
        assert!(!r.is_splash && r.t_s.is_none());
    }
}
