//! Birkhoff–Rott integral and the second-kind equation for the vorticity amplitude.
//!
//! Planar vectors are carried as complex numbers. The kernel is split into a cotangent
//! part, evaluated exactly through the Hilbert multiplier, and a smooth remainder
//! summed by the trapezoid rule.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::conformal;
use crate::contour::{CurveMode, SampledCurve};
use crate::error::{Error, Result};
use crate::spectral::{self, GridFunction, C64};

/// Sheet strength `ω` sampled on the curve grid.
pub type VorticityAmplitude = GridFunction;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParams {
    pub rho0: f64,
    pub mu0: f64,
}

impl FluidParams {
    pub fn new(rho0: f64, mu0: f64) -> Result<Self> {
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return Err(Error::InvalidParameter("rho0 must be positive"));
        }
        if !(mu0 > 0.0 && mu0.is_finite()) {
            return Err(Error::InvalidParameter("mu0 must be positive"));
        }
        Ok(FluidParams { rho0, mu0 })
    }

    pub fn ratio(&self) -> f64 {
        self.rho0 / self.mu0
    }
}

impl Default for FluidParams {
    fn default() -> Self {
        FluidParams { rho0: 1.0, mu0: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Physical,
    Tilde,
}

/// `cot w`, evaluated through `e^{2iw}` on the half plane where it stays bounded.
pub fn cot(w: C64) -> C64 {
    if w.im < 0.0 {
        return cot(w.conj()).conj();
    }
    let e = (C64::new(0.0, 2.0) * w).exp();
    C64::new(0.0, 1.0) * (e + 1.0) / (e - 1.0)
}

/// The Birkhoff–Rott operator of a fixed curve, with its smooth remainder assembled.
#[derive(Debug, Clone)]
pub struct BrOperator {
    n: usize,
    tangent: Vec<C64>,
    remainder: Vec<C64>,
}

impl BrOperator {
    pub fn new(curve: &SampledCurve) -> Result<Self> {
        let n = curve.n();
        let h = 2.0 * PI / n as f64;
        let z = curve.points();
        let tangent = curve.tangent();
        let second = curve.curvature_vector();
        let alpha = spectral::nodes(n);
        let graph = curve.mode() == CurveMode::GraphPeriodic;
        let mut remainder = vec![C64::new(0.0, 0.0); n * n];
        let mut worst = f64::INFINITY;
        for i in 0..n {
            let ti = tangent[i];
            for j in 0..n {
                let entry = if i == j {
                    second[i] / (ti * ti * 2.0)
                } else {
                    let dz = z[i] - z[j];
                    let da = alpha[i] - alpha[j];
                    let ker = if graph { cot(dz * 0.5) * 0.5 } else { dz.inv() };
                    let chord = if graph {
                        (dz - C64::new(2.0 * PI * (da / (2.0 * PI)).round(), 0.0)).norm()
                    } else {
                        dz.norm()
                    };
                    worst = worst.min(chord / crate::contour::param_distance(alpha[i], alpha[j]));
                    ker - C64::new(0.5 / (0.5 * da).tan(), 0.0) / ti
                };
                remainder[i * n + j] = entry * h;
            }
        }
        if !(worst > 1e-10) {
            return Err(Error::ChordArc(worst));
        }
        if let Some(k) = remainder.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite(k / n));
        }
        Ok(BrOperator { n, tangent, remainder })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tangent(&self) -> &[C64] {
        &self.tangent
    }

    /// `BR(z, ω)` at every sample.
    pub fn apply(&self, omega: &[f64]) -> Vec<C64> {
        let n = self.n;
        let wc: Vec<C64> = omega.iter().map(|&w| C64::new(w, 0.0)).collect();
        let hw = spectral::hilbert_complex(&wc);
        let factor = C64::new(0.0, -1.0 / (2.0 * PI));
        (0..n)
            .map(|i| {
                let row = &self.remainder[i * n..(i + 1) * n];
                let mut acc = C64::new(0.0, 0.0);
                for (r, &w) in row.iter().zip(omega) {
                    acc += r * w;
                }
                acc += hw[i].re * PI / self.tangent[i];
                (factor * acc).conj()
            })
            .collect()
    }

    /// `K[ω] = 2 BR(z, ω)·z_α`.
    pub fn double_layer(&self, omega: &[f64]) -> Vec<f64> {
        self.apply(omega)
            .iter()
            .zip(&self.tangent)
            .map(|(b, t)| 2.0 * (b.conj() * t).re)
            .collect()
    }
}

pub fn br_eval(curve: &SampledCurve, omega: &VorticityAmplitude) -> Result<Vec<C64>> {
    check_len(curve, omega)?;
    Ok(BrOperator::new(curve)?.apply(omega.values()))
}

pub fn br_operator_apply(curve: &SampledCurve, omega: &VorticityAmplitude) -> Result<GridFunction> {
    check_len(curve, omega)?;
    GridFunction::new(BrOperator::new(curve)?.double_layer(omega.values()))
}

fn check_len(curve: &SampledCurve, omega: &GridFunction) -> Result<()> {
    if curve.n() != omega.n() {
        return Err(Error::LengthMismatch(curve.n(), omega.n()));
    }
    Ok(())
}

/// Right side of the vorticity equation: `-2(ρ₀/μ₀) ∂_α z₂` in the physical domain,
/// `-2(ρ₀/μ₀) ∂_α (P₂⁻¹ ∘ z̃)` in the tilde domain.
pub fn omega_forcing(curve: &SampledCurve, params: &FluidParams, domain: Domain) -> Result<GridFunction> {
    let scale = -2.0 * params.ratio();
    let tangent = curve.tangent();
    let values = match domain {
        Domain::Physical => tangent.iter().map(|t| scale * t.im).collect(),
        Domain::Tilde => curve
            .points()
            .iter()
            .zip(&tangent)
            .map(|(&zeta, t)| Ok(scale * (conformal::dP_inv(zeta)? * t).im))
            .collect::<Result<Vec<f64>>>()?,
    };
    GridFunction::new(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Restarted GMRES, falling back to relaxed Picard iteration if it stalls.
    Krylov,
    Picard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restart: usize,
    pub relaxation: f64,
    pub method: SolveMethod,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tolerance: 1e-12,
            max_iterations: 200,
            restart: 60,
            relaxation: 0.8,
            method: SolveMethod::Krylov,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OmegaSolution {
    pub omega: VorticityAmplitude,
    /// `BR(z, ω)` for the returned `ω`.
    pub br: Vec<C64>,
    pub iterations: usize,
    /// `max |ω + K[ω] - f|`.
    pub residual: f64,
    pub method: SolveMethod,
}

/// Solve `ω + K[ω] = f` for the domain's forcing `f`.
pub fn solve_omega(
    curve: &SampledCurve,
    params: &FluidParams,
    domain: Domain,
    guess: Option<&VorticityAmplitude>,
    settings: &SolverSettings,
) -> Result<OmegaSolution> {
    let forcing = omega_forcing(curve, params, domain)?;
    let op = BrOperator::new(curve)?;
    solve_with_operator(&op, &forcing, guess, settings)
}

/// Solve `ω + K[ω] = f` on a prepared operator. The rank-one term `(1/n)·11ᵀω` fixes
/// the mean of `ω`; the exact solution has zero mean, so it leaves that solution
/// unchanged while removing the constant null direction of closed curves.
pub fn solve_with_operator(
    op: &BrOperator,
    forcing: &GridFunction,
    guess: Option<&VorticityAmplitude>,
    settings: &SolverSettings,
) -> Result<OmegaSolution> {
    let n = op.n();
    if forcing.n() != n {
        return Err(Error::LengthMismatch(n, forcing.n()));
    }
    let f = forcing.values();
    let gauged = |w: &[f64]| -> Vec<f64> {
        let mean = w.iter().sum::<f64>() / n as f64;
        op.double_layer(w).iter().zip(w).map(|(k, v)| v + k + mean).collect()
    };
    let x0 = match guess {
        Some(g) if g.n() == n => g.values().to_vec(),
        _ => vec![0.0; n],
    };
    let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut x, mut iterations, mut method) = (x0.clone(), 0, settings.method);
    let mut done = false;
    if settings.method == SolveMethod::Krylov {
        let out = gmres(&gauged, f, x0.clone(), settings);
        x = out.0;
        iterations = out.1;
        done = out.2;
        if !done {
            method = SolveMethod::Picard;
            x = x0;
        }
    }
    if !done {
        let out = picard(&gauged, f, x, settings);
        x = out.0;
        iterations += out.1;
        done = out.2;
    }
    let br = op.apply(&x);
    let residual = op
        .double_layer(&x)
        .iter()
        .zip(&x)
        .zip(f)
        .fold(0.0f64, |m, ((k, w), fi)| m.max((w + k - fi).abs()));
    if !done || !(residual <= 1e-10 * scale.max(1.0)) {
        return Err(Error::NoConvergence {
            iterations,
            residual: residual / scale.max(f64::MIN_POSITIVE),
        });
    }
    Ok(OmegaSolution {
        omega: GridFunction::new(x)?,
        br,
        iterations,
        residual,
        method,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual_of(apply: &impl Fn(&[f64]) -> Vec<f64>, b: &[f64], x: &[f64]) -> Vec<f64> {
    apply(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

/// Restarted GMRES with modified Gram–Schmidt and Givens rotations.
fn gmres(
    apply: &impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    mut x: Vec<f64>,
    settings: &SolverSettings,
) -> (Vec<f64>, usize, bool) {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return (vec![0.0; n], 0, true);
    }
    let target = settings.tolerance * bnorm;
    let m = settings.restart.max(1).min(n);
    let mut total = 0;
    while total < settings.max_iterations {
        let r = residual_of(apply, b, &x);
        let beta = norm(&r);
        if beta <= target {
            return (x, total, true);
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && total < settings.max_iterations {
            let mut w = apply(&basis[k]);
            for (i, v) in basis.iter().enumerate() {
                let hik: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
                hess[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= hik * vj;
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let denom = hess[k][k].hypot(hess[k + 1][k]);
            if denom == 0.0 {
                break;
            }
            cs[k] = hess[k][k] / denom;
            sn[k] = hess[k + 1][k] / denom;
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k += 1;
            if g[k].abs() <= target || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| hess[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        for (i, yi) in y.iter().enumerate() {
            for (xj, vj) in x.iter_mut().zip(&basis[i]) {
                *xj += yi * vj;
            }
        }
        if k == 0 {
            break;
        }
    }
    let ok = norm(&residual_of(apply, b, &x)) <= target;
    (x, total, ok)
}

/// Relaxed fixed-point iteration `ω ← ω + θ (f - (I + K)ω)`.
fn picard(
    apply: &impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    mut x: Vec<f64>,
    settings: &SolverSettings,
) -> (Vec<f64>, usize, bool) {
    let target = settings.tolerance * norm(b).max(f64::MIN_POSITIVE);
    for it in 0..settings.max_iterations {
        let r = residual_of(apply, b, &x);
        let rn = norm(&r);
        if rn <= target || rn == 0.0 {
            return (x, it, true);
        }
        if !rn.is_finite() {
            return (x, it, false);
        }
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += settings.relaxation * ri;
        }
    }
    let ok = norm(&residual_of(apply, b, &x)) <= target;
    (x, settings.max_iterations, ok)
}

/// `u = BR(z, ω) + ω z_α / (2|z_α|²)`: the interface velocity seen from the fluid,
/// which lies to the right of increasing `α`.
pub fn surface_velocity_from(br: &[C64], tangent: &[C64], omega: &[f64]) -> Vec<C64> {
    br.iter()
        .zip(tangent)
        .zip(omega)
        .map(|((b, t), w)| b + t * (w / (2.0 * t.norm_sqr())))
        .collect()
}

pub fn surface_velocity(curve: &SampledCurve, omega: &VorticityAmplitude) -> Result<Vec<C64>> {
    let br = br_eval(curve, omega)?;
    Ok(surface_velocity_from(&br, &curve.tangent(), omega.values()))
}

/// Velocity induced by the sheet at a point off the curve, by direct quadrature.
pub fn velocity_field(curve: &SampledCurve, omega: &VorticityAmplitude, x: C64) -> Result<C64> {
    check_len(curve, omega)?;
    let n = curve.n();
    let h = 2.0 * PI / n as f64;
    let z = curve.points();
    let speed = curve.tangent().iter().fold(0.0f64, |m, t| m.max(t.norm()));
    let graph = curve.mode() == CurveMode::GraphPeriodic;
    let gap = z
        .iter()
        .map(|&zj| {
            let d = x - zj;
            if graph {
                (d - C64::new(2.0 * PI * (d.re / (2.0 * PI)).round(), 0.0)).norm()
            } else {
                d.norm()
            }
        })
        .fold(f64::INFINITY, f64::min);
    if gap <= 10.0 * h * speed {
        return Err(Error::InvalidParameter("evaluation point is too close to the curve"));
    }
    let mut acc = C64::new(0.0, 0.0);
    for (zj, w) in z.iter().zip(omega.values()) {
        let d = x - zj;
        let ker = if graph { cot(d * 0.5) * 0.5 } else { d.inv() };
        acc += ker * (w * h);
    }
    Ok((C64::new(0.0, -1.0 / (2.0 * PI)) * acc).conj())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cot_matches_ratio_and_stays_finite() {
        let w = C64::new(0.7, -0.3);
        let direct = w.cos() / w.sin();
        assert!((cot(w) - direct).norm() < 1e-14);
        let far = cot(C64::new(0.3, 400.0));
        assert!((far - C64::new(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn flat_sheet_examples() {
        let flat = SampledCurve::flat(64).unwrap();
        let one = GridFunction::from_fn(64, |_| 1.0).unwrap();
        let br = br_eval(&flat, &one).unwrap();
        assert!(br.iter().all(|b| b.norm() < 1e-12));
        let k = br_operator_apply(&flat, &GridFunction::from_fn(64, |a| a.sin()).unwrap()).unwrap();
        assert!(k.max_abs() < 1e-12);
    }

    #[test]
    fn fluid_params_reject_nonpositive() {
        assert!(FluidParams::new(0.0, 1.0).is_err());
        assert!(FluidParams::new(1.0, -1.0).is_err());
        assert_eq!(FluidParams::new(2.0, 4.0).unwrap().ratio(), 0.5);
    }

    fn wavy_circle(n: usize, amp: [f64; 3]) -> SampledCurve {
        SampledCurve::from_fn(CurveMode::Closed, n, |a| {
            let r = 1.0 + amp[0] * (2.0 * a).cos() + amp[1] * (3.0 * a).sin() + amp[2] * (5.0 * a).cos();
            C64::from_polar(r, a)
        })
        .unwrap()
    }

    #[test]
    fn circular_sheet_is_tangential_with_half_strength() {
        let circle = SampledCurve::circle(256, C64::new(0.0, 0.0), 1.0).unwrap();
        let one = GridFunction::from_fn(256, |_| 1.0).unwrap();
        let br = br_eval(&circle, &one).unwrap();
        for (b, t) in br.iter().zip(circle.tangent()) {
            let unit = t / t.norm();
            assert!(((b * unit.conj()).re - 0.5).abs() < 1e-8);
            assert!((b * unit.conj()).im.abs() < 1e-10);
        }
        let u = surface_velocity(&circle, &one).unwrap();
        for (v, t) in u.iter().zip(circle.tangent()) {
            let unit = t / t.norm();
            assert!(((v * unit.conj()).re - 1.0).abs() < 1e-8);
            assert!((v * unit.conj()).im.abs() < 1e-10);
        }
    }

    #[test]
    fn birkhoff_rott_is_linear_in_omega() {
        let curve = wavy_circle(128, [0.1, 0.05, 0.02]);
        let w1 = GridFunction::from_fn(128, |a| a.sin() + 0.3 * (2.0 * a).cos()).unwrap();
        let w2 = GridFunction::from_fn(128, |a| (3.0 * a).cos().exp()).unwrap();
        let (a, b) = (0.7, -1.9);
        let mix = GridFunction::new(
            w1.values()
                .iter()
                .zip(w2.values())
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
        .unwrap();
        let lhs = br_eval(&curve, &mix).unwrap();
        let (r1, r2) = (br_eval(&curve, &w1).unwrap(), br_eval(&curve, &w2).unwrap());
        for ((l, x), y) in lhs.iter().zip(&r1).zip(&r2) {
            assert!((l - (x * a + y * b)).norm() < 1e-12);
        }
        let zero = GridFunction::zeros(128).unwrap();
        assert!(br_operator_apply(&curve, &zero).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn flat_graph_has_no_vorticity() {
        let flat = SampledCurve::flat(64).unwrap();
        let sol = solve_omega(
            &flat,
            &FluidParams::default(),
            Domain::Physical,
            None,
            &SolverSettings::default(),
        )
        .unwrap();
        assert!(sol.omega.max_abs() == 0.0);
        let u = surface_velocity(&flat, &sol.omega).unwrap();
        assert!(u.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn small_cosine_graph_has_sine_vorticity() {
        let eps = 1e-6;
        let curve = SampledCurve::from_fn(CurveMode::GraphPeriodic, 64, |a| C64::new(a, eps * a.cos())).unwrap();
        let params = FluidParams::new(1.0, 1.0).unwrap();
        let krylov = solve_omega(&curve, &params, Domain::Physical, None, &SolverSettings::default()).unwrap();
        let picard = SolverSettings {
            method: SolveMethod::Picard,
            ..Default::default()
        };
        let fixed = solve_omega(&curve, &params, Domain::Physical, None, &picard).unwrap();
        let mode1 = |w: &GridFunction| -2.0 * w.spectrum().coefficient(1).im;
        assert!((mode1(&krylov.omega) - 2.0 * eps).abs() < 2.0 * eps * 1e-5);
        assert!((mode1(&fixed.omega) - mode1(&krylov.omega)).abs() < 1e-16);
    }

    #[test]
    fn solution_satisfies_the_second_kind_equation() {
        let params = FluidParams::new(1.3, 0.7).unwrap();
        let curve = wavy_circle(128, [0.15, -0.08, 0.03]);
        let small: Vec<C64> = curve.points().iter().map(|p| p * 0.5).collect();
        let curve = SampledCurve::from_points(CurveMode::Closed, &small).unwrap();
        let sol = solve_omega(&curve, &params, Domain::Tilde, None, &SolverSettings::default()).unwrap();
        let f = omega_forcing(&curve, &params, Domain::Tilde).unwrap();
        let k = br_operator_apply(&curve, &sol.omega).unwrap();
        let res = sol
            .omega
            .values()
            .iter()
            .zip(k.values())
            .zip(f.values())
            .fold(0.0f64, |m, ((w, k), f)| m.max((w + k - f).abs()));
        assert!(res < 1e-10);
        assert!((res - sol.residual).abs() < 1e-15);
    }

    #[test]
    fn normal_velocity_ignores_the_tangential_correction() {
        let curve = wavy_circle(128, [0.1, 0.05, 0.0]);
        let w = GridFunction::from_fn(128, |a| (2.0 * a).sin()).unwrap();
        let br = br_eval(&curve, &w).unwrap();
        let u = surface_velocity(&curve, &w).unwrap();
        for ((v, b), t) in u.iter().zip(&br).zip(curve.tangent()) {
            let normal = C64::new(0.0, 1.0) * t;
            assert!(((v - b).conj() * normal).re.abs() < 1e-14);
        }
    }

    #[test]
    fn velocity_field_examples() {
        let flat = SampledCurve::flat(256).unwrap();
        let one = GridFunction::from_fn(256, |_| 1.0).unwrap();
        let below = velocity_field(&flat, &one, C64::new(0.0, -5.0)).unwrap();
        assert!((below - C64::new(0.5, 0.0)).norm() < 1e-8);
        let above = velocity_field(&flat, &one, C64::new(0.0, 5.0)).unwrap();
        assert!((above + below).norm() < 1e-12);
        let zero = GridFunction::zeros(256).unwrap();
        assert_eq!(
            velocity_field(&flat, &zero, C64::new(0.3, 2.0)).unwrap(),
            C64::new(0.0, 0.0)
        );
        assert!(velocity_field(&flat, &one, C64::new(0.0, 1e-3)).is_err());
        let curve = wavy_circle(256, [0.1, 0.05, 0.02]);
        let near = velocity_field(&curve, &one, C64::new(10.0, 0.0)).unwrap().norm();
        let far = velocity_field(&curve, &one, C64::new(20.0, 0.0)).unwrap().norm();
        assert!((far / near - 0.5).abs() < 0.01);
    }

    #[test]
    fn resolution_doubling_changes_br_below_tolerance() {
        let w = |a: f64| (a.sin()).exp() - 1.0;
        let coarse_curve = wavy_circle(256, [0.1, 0.05, 0.02]);
        let fine_curve = wavy_circle(512, [0.1, 0.05, 0.02]);
        let coarse = br_eval(&coarse_curve, &GridFunction::from_fn(256, w).unwrap()).unwrap();
        let fine = br_eval(&fine_curve, &GridFunction::from_fn(512, w).unwrap()).unwrap();
        for (j, c) in coarse.iter().enumerate() {
            assert!((c - fine[2 * j]).norm() < 1e-8);
        }
    }
}
