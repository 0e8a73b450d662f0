//! Acceptance checks shared by the scenarios and the acceptance suite.

use std::f64::consts::TAU;

use muskat_core::birkhoff_rott::{self, Domain, FluidParams, SolveMethod, SolverSettings};
use muskat_core::conformal::{self, BranchSpec};
use muskat_core::contour::{self, CurveMode, SampledCurve, SplashCurveParams};
use muskat_core::diagnostics::{self, DiagnosticsRecord};
use muskat_core::evolution::{self, EvolutionState, StepControls, Termination, Trajectory};
use muskat_core::spectral::{self, GridFunction, C64};
use muskat_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::output::CheckOutcome;

pub const OPERATOR_EXACTNESS: &str = "operator exactness";
pub const STEADY_STATE: &str = "steady state";
pub const SECOND_KIND_SOLVE: &str = "second-kind solve";
pub const SPECTRAL_CONVERGENCE: &str = "spectral convergence";
pub const LINEAR_DECAY: &str = "linear decay oracle";
pub const CONFORMAL_CONSISTENCY: &str = "conformal consistency";
pub const TILDE_PHYSICAL_EQUIVALENCE: &str = "tilde/physical equivalence";
pub const ARCLENGTH_EQUALIZATION: &str = "arclength equalization";
pub const FINITE_TIME_SPLASH: &str = "finite-time splash";
pub const VELOCITY_SIGN: &str = "contact velocity sign";
pub const STABILITY: &str = "stability experiment";
pub const ENERGY_BOUNDEDNESS: &str = "energy boundedness";

/// Every criterion, in reporting order.
pub const ALL: [&str; 12] = [
    OPERATOR_EXACTNESS,
    STEADY_STATE,
    SECOND_KIND_SOLVE,
    SPECTRAL_CONVERGENCE,
    LINEAR_DECAY,
    CONFORMAL_CONSISTENCY,
    TILDE_PHYSICAL_EQUIVALENCE,
    ARCLENGTH_EQUALIZATION,
    FINITE_TIME_SPLASH,
    VELOCITY_SIGN,
    STABILITY,
    ENERGY_BOUNDEDNESS,
];

/// Smooth graph used by the equivalence and stability experiments.
pub fn reference_graph(n: usize) -> Result<SampledCurve> {
    SampledCurve::from_fn(CurveMode::GraphPeriodic, n, |a| {
        C64::new(a, -0.5 + 0.2 * a.cos() + 0.05 * (2.0 * a).sin())
    })
}

pub fn physical_state(curve: SampledCurve, params: FluidParams) -> Result<EvolutionState> {
    EvolutionState::new(Domain::Physical, curve, params, BranchSpec::principal())
}

fn max_norm(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (p, q)| m.max((p - q).norm()))
}

fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Derivative, Hilbert transform and `Λ` on every resolved mode, plus `H∂_α = Λ`.
pub fn operator_exactness(n: usize) -> Result<CheckOutcome> {
    let mut worst = 0.0f64;
    let mut worst_identity = 0.0f64;
    for k in 1..n / 2 {
        let kf = k as f64;
        let phase = 0.3 + 0.1 * kf;
        let f = GridFunction::from_fn(n, |a| (kf * a + phase).cos())?;
        let d = GridFunction::from_fn(n, |a| -kf * (kf * a + phase).sin())?;
        let h = GridFunction::from_fn(n, |a| (kf * a + phase).sin())?;
        let l = GridFunction::from_fn(n, |a| kf * (kf * a + phase).cos())?;
        worst = worst
            .max(max_diff(&spectral::deriv(&f), &d) / kf)
            .max(max_diff(&spectral::hilbert(&f), &h))
            .max(max_diff(&spectral::lambda_op(&f), &l) / kf);
        let hd = spectral::hilbert(&spectral::deriv(&f));
        worst_identity = worst_identity.max(max_diff(&hd, &spectral::lambda_op(&f)) / kf);
    }
    Ok(CheckOutcome::new(
        OPERATOR_EXACTNESS,
        worst < 1e-12 && worst_identity < 1e-12,
        format!("n = {n}: multiplier error {worst:.2e}, H(d/dα) - Λ {worst_identity:.2e} (relative to |k|)"),
    ))
}

fn random_amps(rng: &mut ChaCha8Rng, limit: f64) -> [f64; 3] {
    [
        rng.gen_range(-limit..limit),
        rng.gen_range(-limit..limit),
        rng.gen_range(-limit..limit),
    ]
}

fn wavy_graph(n: usize, amp: [f64; 3]) -> Result<SampledCurve> {
    SampledCurve::from_fn(CurveMode::GraphPeriodic, n, |a| {
        C64::new(
            a,
            -0.5 + amp[0] * a.cos() + amp[1] * (2.0 * a).sin() + amp[2] * (3.0 * a).cos(),
        )
    })
}

fn wavy_loop(n: usize, amp: [f64; 3]) -> Result<SampledCurve> {
    SampledCurve::from_fn(CurveMode::Closed, n, |a| {
        let r = 1.0 + amp[0] * (2.0 * a).cos() + amp[1] * (3.0 * a).sin() + amp[2] * a.cos();
        C64::from_polar(0.5 * r, a)
    })
}

/// Twenty seeded analytic curves, alternating physical graphs and tilde loops.
pub fn curve_corpus(n: usize, seed: u64) -> Result<Vec<(SampledCurve, Domain)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..20)
        .map(|j| {
            let amp = random_amps(&mut rng, 0.25);
            if j % 2 == 0 {
                Ok((wavy_graph(n, amp)?, Domain::Physical))
            } else {
                Ok((wavy_loop(n, amp)?, Domain::Tilde))
            }
        })
        .collect()
}

pub fn second_kind_solve(n: usize, seed: u64, params: FluidParams) -> Result<CheckOutcome> {
    let picard = SolverSettings {
        method: SolveMethod::Picard,
        max_iterations: 2000,
        ..Default::default()
    };
    let mut worst_residual = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut both = 0;
    for (curve, domain) in curve_corpus(n, seed)? {
        let krylov = birkhoff_rott::solve_omega(&curve, &params, domain, None, &SolverSettings::default())?;
        let forcing = birkhoff_rott::omega_forcing(&curve, &params, domain)?;
        let k = birkhoff_rott::br_operator_apply(&curve, &krylov.omega)?;
        let residual = krylov
            .omega
            .values()
            .iter()
            .zip(k.values())
            .zip(forcing.values())
            .fold(0.0f64, |m, ((w, k), f)| m.max((w + k - f).abs()));
        worst_residual = worst_residual.max(residual);
        if let Ok(p) = birkhoff_rott::solve_omega(&curve, &params, domain, None, &picard) {
            worst_gap = worst_gap.max(max_diff(&krylov.omega, &p.omega));
            both += 1;
        }
    }
    Ok(CheckOutcome::new(
        SECOND_KIND_SOLVE,
        worst_residual < 1e-10 && worst_gap < 1e-8 && both > 0,
        format!(
            "20 curves: max residual {worst_residual:.2e}; Krylov vs Picard {worst_gap:.2e} on {both} curves where both converge"
        ),
    ))
}

type CurveMaker = fn(usize, [f64; 3]) -> Result<SampledCurve>;

/// `br_eval` at `n` against `2n` on analytic curves, and the circular sheet.
pub fn spectral_convergence(n: usize) -> Result<CheckOutcome> {
    let omega = |m: usize| GridFunction::from_fn(m, |a| a.cos() + 0.3 * (2.0 * a).sin());
    let mut worst = 0.0f64;
    let curves: [(CurveMaker, [f64; 3]); 4] = [
        (wavy_graph, [0.2, 0.05, 0.02]),
        (wavy_graph, [-0.25, 0.1, -0.05]),
        (wavy_loop, [0.1, 0.05, 0.02]),
        (wavy_loop, [-0.2, 0.1, 0.15]),
    ];
    for (make, amp) in curves {
        let coarse = birkhoff_rott::br_eval(&make(n, amp)?, &omega(n)?)?;
        let fine = birkhoff_rott::br_eval(&make(2 * n, amp)?, &omega(2 * n)?)?;
        let shared: Vec<C64> = fine.iter().step_by(2).copied().collect();
        worst = worst.max(max_norm(&coarse, &shared));
    }
    let circle = SampledCurve::circle(n, C64::new(0.0, 0.0), 1.0)?;
    let one = GridFunction::from_fn(n, |_| 1.0)?;
    let br = birkhoff_rott::br_eval(&circle, &one)?;
    let circle_err = br.iter().zip(circle.tangent()).fold(0.0f64, |m, (b, t)| {
        let along = b * (t / t.norm()).conj();
        m.max((along.re - 0.5).abs()).max(along.im.abs())
    });
    Ok(CheckOutcome::new(
        SPECTRAL_CONVERGENCE,
        worst < 1e-8 && circle_err < 1e-8,
        format!(
            "n = {n} vs {}: {worst:.2e}; circular sheet vs 1/2 tangential: {circle_err:.2e}",
            2 * n
        ),
    ))
}

/// Round trips of `P`, `Q²` at `1`, and tangent transport on a graph and on the
/// splash family.
pub fn conformal_consistency(splash_n: usize) -> Result<CheckOutcome> {
    let principal = BranchSpec::principal();
    let mut round_trip = 0.0f64;
    for i in 0..41 {
        for j in 0..41 {
            let w = C64::new(-3.0 + 6.0 * i as f64 / 40.0, -1.5 + 1.45 * j as f64 / 40.0);
            let zeta = conformal::map_P(w, &principal)?;
            round_trip = round_trip.max((conformal::map_P_inv(zeta)? - w).norm());
            let z = C64::new(-1.5 + 3.0 * i as f64 / 40.0, -1.5 + 3.0 * j as f64 / 40.0);
            if conformal::singular_points().points.iter().any(|q| (z - q).norm() < 0.2) {
                continue;
            }
            let back = conformal::map_P(conformal::map_P_inv(z)?, &principal)?;
            round_trip = round_trip.max((back - z).norm().min((back + z).norm()));
        }
    }
    let q_at_one = conformal::q_factor_at(C64::new(1.0, 0.0), &principal)?;
    let transport = |curve: &SampledCurve, branch: &BranchSpec| -> Result<f64> {
        let tilde = contour::to_tilde(curve, branch)?;
        let mut worst = 0.0f64;
        for ((dz, p), dzt) in curve.tangent().iter().zip(curve.points()).zip(tilde.tangent()) {
            worst = worst.max((dzt - conformal::dP_dw(p, branch)? * dz).norm());
        }
        Ok(worst)
    };
    let family = SplashCurveParams::default();
    let splash = contour::make_splash_curve(&family, splash_n)?;
    let graph_err = transport(&reference_graph(256)?, &principal)?;
    let splash_err = transport(&splash, &BranchSpec::through(family.contact_point())?)?;
    let passed = round_trip < 1e-12 && (q_at_one - 0.25).abs() < 1e-8 && graph_err < 1e-8 && splash_err < 1e-8;
    Ok(CheckOutcome::new(
        CONFORMAL_CONSISTENCY,
        passed,
        format!(
            "round trip {round_trip:.2e}; Q²(1) = {q_at_one:.12}; tangent transport {graph_err:.2e} (graph, n = 256), {splash_err:.2e} (splash family, n = {splash_n})"
        ),
    ))
}

/// Short-time runs of the reference graph in both domains.
pub struct Equivalence {
    pub outcome: CheckOutcome,
    pub physical: Trajectory,
    pub tilde: Trajectory,
}

pub fn tilde_physical_equivalence(n: usize, params: FluidParams, t_max: f64) -> Result<Equivalence> {
    let branch = BranchSpec::principal();
    let start = reference_graph(n)?;
    let (tilde, _) = contour::to_tilde_equal_arclength(&start, &branch, n)?;
    let controls = StepControls {
        t_max,
        splash_delta: Some(1e-3),
        ..Default::default()
    };
    let physical = evolution::run(physical_state(start, params)?, &controls)?;
    let tilde = evolution::run(EvolutionState::new(Domain::Tilde, tilde, params, branch)?, &controls)?;
    for t in [&physical, &tilde] {
        if let Termination::Failure(e) = &t.termination {
            return Err(e.clone());
        }
    }
    let back = tilde.final_state.physical_curve()?;
    let d = diagnostics::h1_distance(
        &contour::resample_as_graph(&physical.final_state.curve)?,
        &contour::resample_as_graph(&back)?,
    )?;
    let budget = 10.0 * (physical.error_sum + tilde.error_sum);
    let finished = physical.termination == Termination::TimeLimit && tilde.termination == Termination::TimeLimit;
    let outcome = CheckOutcome::new(
        TILDE_PHYSICAL_EQUIVALENCE,
        finished && d < budget,
        format!("t = {t_max}, n = {n}: H1 distance {d:.2e} vs 10x error estimates {budget:.2e}"),
    );
    Ok(Equivalence {
        outcome,
        physical,
        tilde,
    })
}

pub fn arclength_equalization(runs: &[(&str, &[DiagnosticsRecord])]) -> CheckOutcome {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, records) in runs {
        let spread = records.iter().fold(0.0f64, |m, r| m.max(r.arclength_spread));
        worst = worst.max(spread);
        parts.push(format!("{name} {spread:.2e}"));
    }
    CheckOutcome::new(
        ARCLENGTH_EQUALIZATION,
        worst < 1e-7 && !runs.is_empty(),
        format!("max std/mean of |z_α| over tilde runs: {}", parts.join(", ")),
    )
}

/// Every record of every run has a finite `E₃` with finite parts; a violation is
/// reported by the name of its component.
pub fn energy_boundedness(runs: &[(&str, &[DiagnosticsRecord])]) -> CheckOutcome {
    let mut failures = Vec::new();
    let mut top = 0.0f64;
    let mut count = 0;
    for (name, records) in runs {
        for r in records.iter() {
            count += 1;
            let p = &r.parts;
            let finite = r.e3.is_finite()
                && p.h3_sq.is_finite()
                && p.f_sup_sq.is_finite()
                && p.inv_m_sigma.is_finite()
                && p.inv_m_q.iter().all(|v| v.is_finite());
            if finite && r.violation.is_none() {
                top = top.max(r.e3);
            } else if failures.len() < 3 {
                failures.push(format!(
                    "{name} at t = {}: {}",
                    r.t,
                    r.violation.unwrap_or("non-finite part")
                ));
            }
        }
    }
    let passed = failures.is_empty() && count > 0;
    let detail = if passed {
        format!("{count} records finite, max E3 {top:.4e}")
    } else {
        format!("blow-up: {}", failures.join("; "))
    };
    CheckOutcome::new(ENERGY_BOUNDEDNESS, passed, detail)
}

/// Mode-1 eigenvalue of the central-difference Jacobian of the vertical velocity at
/// the flat state, assembled column by column.
pub fn jacobian_mode1(n: usize, params: FluidParams) -> Result<f64> {
    let h = 1e-7;
    let flat = SampledCurve::flat(n)?;
    let mut jac = vec![vec![0.0; n]; n];
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut dy = vec![0.0; n];
            dy[j] = sign * h;
            let state = physical_state(flat.displaced(&vec![0.0; n], &dy)?, params)?;
            let v = evolution::rhs(&state)?.velocity;
            for i in 0..n {
                jac[i][j] += sign * v[i].im / (2.0 * h);
            }
        }
    }
    let cos: Vec<f64> = spectral::nodes(n).iter().map(|a| a.cos()).collect();
    let applied: Vec<f64> = jac
        .iter()
        .map(|row| row.iter().zip(&cos).map(|(a, b)| a * b).sum())
        .collect();
    Ok(applied.iter().zip(&cos).map(|(a, b)| a * b).sum::<f64>() / cos.iter().map(|c| c * c).sum::<f64>())
}

pub fn linear_decay(amplitude: &[(f64, f64)], sup: &[f64], jacobian: f64) -> CheckOutcome {
    let rate = diagnostics::decay_rate_fit(amplitude);
    let monotone = sup.windows(2).all(|w| w[1] < w[0]);
    match rate {
        Ok(rate) => CheckOutcome::new(
            LINEAR_DECAY,
            (rate - jacobian).abs() < 0.05 * jacobian.abs() && monotone,
            format!(
                "fitted rate {rate:.6} vs Jacobian {jacobian:.6} ({:.3}%), L-inf decay monotone: {monotone}",
                100.0 * (rate - jacobian).abs() / jacobian.abs()
            ),
        ),
        Err(e) => CheckOutcome::new(LINEAR_DECAY, false, format!("fit failed: {e}")),
    }
}

/// Normal velocities at the closest pair of a near-splash curve, each counted
/// positive toward the other side of the neck.
pub fn contact_normal_velocities(neck_width: f64, n: usize, params: FluidParams) -> Result<(f64, f64, f64)> {
    let family = SplashCurveParams {
        neck_width,
        ..Default::default()
    };
    let curve = contour::make_splash_curve(&family, n)?;
    let pair = contour::interface_min_distance(&curve, StepControls::default().contact_separation)?;
    let velocity = evolution::rhs(&physical_state(curve.clone(), params)?)?.velocity;
    let vx = GridFunction::new(velocity.iter().map(|v| v.re).collect())?;
    let vy = GridFunction::new(velocity.iter().map(|v| v.im).collect())?;
    let interp = curve.interpolant();
    let toward = |alpha: f64, from: C64, to: C64| {
        let u = C64::new(vx.interpolate(alpha), vy.interpolate(alpha));
        let t = interp.tangent(alpha);
        let mut normal = C64::new(-t.im, t.re) / t.norm();
        if (normal.conj() * (to - from)).re < 0.0 {
            normal = -normal;
        }
        (u.conj() * normal).re
    };
    Ok((
        toward(pair.alpha1, pair.point1, pair.point2),
        toward(pair.alpha2, pair.point2, pair.point1),
        pair.distance,
    ))
}

pub fn velocity_sign(necks: &[f64], n: usize, params: FluidParams) -> Result<CheckOutcome> {
    let mut passed = true;
    let mut parts = Vec::new();
    for &neck in necks {
        let (v1, v2, gap) = contact_normal_velocities(neck, n, params)?;
        passed &= v1 > 0.0 && v2 > 0.0;
        parts.push(format!("neck {neck}: gap {gap:.4}, u·n {v1:+.4e} / {v2:+.4e}"));
    }
    Ok(CheckOutcome::new(VELOCITY_SIGN, passed, parts.join("; ")))
}

/// Splash-time estimates of the base, refined and tighter-tolerance runs.
pub struct SplashTimes {
    pub base: Option<f64>,
    pub refined: Option<f64>,
    pub tight: Option<f64>,
}

pub fn finite_time_splash(base: &Trajectory, times: &SplashTimes, splash_delta: f64) -> CheckOutcome {
    let records = &base.records;
    let tail = &records[records.len().saturating_sub(51)..];
    let monotone = records.len() > 51 && tail.windows(2).all(|w| w[1].min_dist < w[0].min_dist);
    let chord_arc = records.last().map_or(f64::NAN, |r| r.chord_arc);
    let sigma = records.iter().fold(f64::INFINITY, |m, r| m.min(r.sigma_min));
    let stopped = base.termination == Termination::SplashDistance && base.splash.is_splash;
    let rel = |other: Option<f64>| match (times.base, other) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => (b - a).abs() / a.abs(),
        _ => f64::INFINITY,
    };
    let (dn, dtol) = (rel(times.refined), rel(times.tight));
    let passed = stopped
        && times.base.is_some_and(f64::is_finite)
        && monotone
        && chord_arc < 10.0 * splash_delta
        && sigma > 0.0
        && dn <= 0.02
        && dtol <= 0.02;
    CheckOutcome::new(
        FINITE_TIME_SPLASH,
        passed,
        format!(
            "stopped on splash distance: {stopped} after {} steps, T_s {}; min_dist decreasing over final 50 steps: {monotone}; \
             final chord-arc {chord_arc:.3e} (limit {:.1e}); min sigma {sigma:.3e}; \
             T_s change {:.2e} under n -> 2n, {:.2e} under error_tol / 10",
            base.steps,
            times.base.map_or("none".to_string(), |t| format!("{t:.10}")),
            10.0 * splash_delta,
            dn,
            dtol
        ),
    )
}

/// Outcome of the paired-run stability experiment.
pub struct StabilitySeries {
    /// `(t, d_large, d_small)` at the common sample times.
    pub samples: Vec<(f64, f64, f64)>,
    pub amplitude: f64,
}

impl StabilitySeries {
    /// Largest slope of `log d` between consecutive samples, over both pairs.
    pub fn max_log_slope(&self) -> f64 {
        self.samples
            .windows(2)
            .flat_map(|w| {
                let dt = w[1].0 - w[0].0;
                [(w[1].1 / w[0].1).ln() / dt, (w[1].2 / w[0].2).ln() / dt]
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Bound on the slope of `log d(t)` accepted as order-one Lipschitz growth.
pub const STABILITY_SLOPE_BOUND: f64 = 10.0;

pub fn stability(series: &StabilitySeries) -> CheckOutcome {
    let Some(&(t0, d0, _)) = series.samples.first() else {
        return CheckOutcome::new(STABILITY, false, "no samples");
    };
    let &(t_end, d_large, d_small) = series.samples.last().unwrap();
    let expected = series.amplitude * TAU.sqrt();
    let slope = series.max_log_slope();
    let ratio = d_small / d_large;
    let passed = t0 == 0.0
        && (d0 - expected).abs() <= 1e-6
        && series.samples.len() >= 3
        && slope.is_finite()
        && slope <= STABILITY_SLOPE_BOUND
        && ratio <= 0.2;
    CheckOutcome::new(
        STABILITY,
        passed,
        format!(
            "h1(0) = {d0:.10e} (expected {expected:.10e}); window [0, {t_end}] over {} samples; \
             max d/dt log h1 {slope:.4} (bound {STABILITY_SLOPE_BOUND}); final ratio {ratio:.4} (limit 0.2)",
            series.samples.len()
        ),
    )
}
