//! Time integration of the contour equation in the physical and tilde domains.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::birkhoff_rott::{self, Domain, FluidParams, OmegaSolution, SolverSettings, VorticityAmplitude};
use crate::conformal::{self, BranchSpec};
use crate::contour::{self, ClosestPair, CurveMode, SampledCurve, SplashReport};
use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::spectral::{self, GridFunction, C64};

/// Reference frame of a physical state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    /// Moving upward with speed `ρ₀/μ₀`; velocities carry the drift `(0, ρ₀/μ₀)`.
    Moving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameDirection {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub domain: Domain,
    pub curve: SampledCurve,
    /// Last solved vorticity amplitude, used as the warm start.
    pub omega: Option<VorticityAmplitude>,
    pub params: FluidParams,
    pub branch: BranchSpec,
    pub t: f64,
    pub frame: Frame,
}

impl EvolutionState {
    /// Physical states hold graph-periodic curves and tilde states closed ones.
    pub fn new(domain: Domain, curve: SampledCurve, params: FluidParams, branch: BranchSpec) -> Result<Self> {
        let expected = match domain {
            Domain::Physical => CurveMode::GraphPeriodic,
            Domain::Tilde => CurveMode::Closed,
        };
        if curve.mode() != expected {
            return Err(Error::InvalidParameter("curve mode does not match the domain"));
        }
        Ok(EvolutionState {
            domain,
            curve,
            omega: None,
            params,
            branch,
            t: 0.0,
            frame: Frame::Lab,
        })
    }

    /// The interface in the physical plane: the curve itself or the pull-back.
    pub fn physical_curve(&self) -> Result<SampledCurve> {
        match self.domain {
            Domain::Physical => Ok(self.curve.clone()),
            Domain::Tilde => contour::from_tilde(&self.curve, &self.branch),
        }
    }

    /// Constant velocity added by the frame tag.
    pub fn velocity_drift(&self) -> C64 {
        match self.frame {
            Frame::Lab => C64::new(0.0, 0.0),
            Frame::Moving => C64::new(0.0, self.params.ratio()),
        }
    }

    /// Velocity at a point off a physical interface, including the frame drift.
    pub fn velocity_at(&self, x: C64) -> Result<C64> {
        if self.domain != Domain::Physical {
            return Err(Error::InvalidParameter(
                "velocity field is evaluated on physical states",
            ));
        }
        let omega = match &self.omega {
            Some(w) => w.clone(),
            None => self.solve(&SolverSettings::default())?.omega,
        };
        Ok(birkhoff_rott::velocity_field(&self.curve, &omega, x)? + self.velocity_drift())
    }

    /// Solve the vorticity equation, warm-started from the cached amplitude.
    pub fn solve(&self, settings: &SolverSettings) -> Result<OmegaSolution> {
        birkhoff_rott::solve_omega(&self.curve, &self.params, self.domain, self.omega.as_ref(), settings)
    }
}

/// Shift a physical state into or out of the frame rising with speed `ρ₀/μ₀`.
pub fn to_moving_frame(state: &EvolutionState, direction: FrameDirection) -> Result<EvolutionState> {
    if state.domain != Domain::Physical {
        return Err(Error::InvalidParameter("frame change applies to physical states"));
    }
    let (shift, frame) = match direction {
        FrameDirection::Forward => (state.params.ratio() * state.t, Frame::Moving),
        FrameDirection::Inverse => (-state.params.ratio() * state.t, Frame::Lab),
    };
    let mut out = state.clone();
    if shift != 0.0 {
        let n = state.curve.n();
        out.curve = state.curve.displaced(&alloc::vec![0.0; n], &alloc::vec![shift; n])?;
    }
    out.frame = frame;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControls {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub error_tol: f64,
    pub cfl_safety: f64,
    pub filter_threshold: f64,
    /// Stop distance; `None` selects three grid cells of physical arc.
    pub splash_delta: Option<f64>,
    pub t_max: f64,
    /// Minimum parameter gap of pairs considered by the interface distance.
    pub contact_separation: f64,
    pub max_steps: usize,
    pub solver: SolverSettings,
}

impl Default for StepControls {
    fn default() -> Self {
        StepControls {
            dt_init: 1e-3,
            dt_min: 1e-12,
            dt_max: 0.1,
            error_tol: 1e-8,
            cfl_safety: 0.5,
            filter_threshold: 1e-13,
            splash_delta: None,
            t_max: 1.0,
            contact_separation: 0.25,
            max_steps: 1_000_000,
            solver: SolverSettings::default(),
        }
    }
}

impl StepControls {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(Error::InvalidParameter(
                "time steps must satisfy 0 < dt_min ≤ dt_init ≤ dt_max",
            ));
        }
        if !(self.error_tol > 0.0) {
            return Err(Error::InvalidParameter("error_tol must be positive"));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidParameter("cfl_safety must lie in (0, 1]"));
        }
        if !(self.filter_threshold >= 0.0) {
            return Err(Error::InvalidParameter("filter_threshold must be nonnegative"));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(Error::InvalidParameter("t_max must be finite and nonnegative"));
        }
        if let Some(d) = self.splash_delta {
            if !(d > 0.0) {
                return Err(Error::InvalidParameter("splash_delta must be positive"));
            }
        }
        Ok(())
    }
}

/// `3 × (2π/n) × max|z_α|` for a physical curve.
pub fn default_splash_delta(physical: &SampledCurve) -> f64 {
    let top = physical.tangent().iter().fold(0.0f64, |m, t| m.max(t.norm()));
    3.0 * (2.0 * PI / physical.n() as f64) * top
}

/// Full right side at one state.
#[derive(Debug, Clone)]
pub struct Rhs {
    pub velocity: Vec<C64>,
    pub solution: OmegaSolution,
    pub tangential: GridFunction,
    /// `max(Q²|BR| + |c z_α|)`.
    pub speed_bound: f64,
}

/// Tangential coefficient keeping `|z_α|` independent of `α`: `c(α) = -(G(α) - G(-π))`
/// with `G` the periodic antiderivative of `g - mean g`, `g = ∂_α(Q²BR)·z_α / |z_α|²`.
pub fn tangential_term(curve: &SampledCurve, br: &[C64], q2: &GridFunction) -> Result<GridFunction> {
    let n = curve.n();
    if br.len() != n || q2.n() != n {
        return Err(Error::LengthMismatch(n, br.len().min(q2.n())));
    }
    let scaled: Vec<C64> = br.iter().zip(q2.values()).map(|(b, q)| b * *q).collect();
    let dv = spectral::deriv_complex(&scaled);
    let tangent = curve.tangent();
    let mut g = Vec::with_capacity(n);
    for (j, (d, t)) in dv.iter().zip(&tangent).enumerate() {
        let s = t.norm_sqr();
        if !(s > 0.0) {
            return Err(Error::DegenerateTangent(j));
        }
        g.push((d.conj() * t).re / s);
    }
    let big_g = spectral::antiderivative(&GridFunction::new(g)?);
    let at_start = big_g.values()[0];
    GridFunction::new(big_g.values().iter().map(|v| -(v - at_start)).collect())
}

fn q_factors(curve: &SampledCurve, domain: Domain) -> Result<GridFunction> {
    match domain {
        Domain::Physical => GridFunction::new(alloc::vec![1.0; curve.n()]),
        Domain::Tilde => conformal::q_factor(curve, &BranchSpec::principal()),
    }
}

fn rhs_for(
    curve: &SampledCurve,
    domain: Domain,
    params: &FluidParams,
    guess: Option<&VorticityAmplitude>,
    settings: &SolverSettings,
) -> Result<Rhs> {
    let solution = birkhoff_rott::solve_omega(curve, params, domain, guess, settings)?;
    let q2 = q_factors(curve, domain)?;
    let tangential = tangential_term(curve, &solution.br, &q2)?;
    let tangent = curve.tangent();
    let mut speed_bound = 0.0f64;
    let velocity = solution
        .br
        .iter()
        .zip(q2.values())
        .zip(tangential.values().iter().zip(&tangent))
        .map(|((b, q), (c, t))| {
            speed_bound = speed_bound.max(q * b.norm() + (c * t).norm());
            b * *q + t * *c
        })
        .collect();
    Ok(Rhs {
        velocity,
        solution,
        tangential,
        speed_bound,
    })
}

/// `z_t = Q² BR + c z_α` at the state, with `Q² ≡ 1` in the physical domain.
pub fn rhs(state: &EvolutionState) -> Result<Rhs> {
    rhs_with(state, &SolverSettings::default())
}

pub fn rhs_with(state: &EvolutionState, settings: &SolverSettings) -> Result<Rhs> {
    rhs_for(
        &state.curve,
        state.domain,
        &state.params,
        state.omega.as_ref(),
        settings,
    )
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// An accepted step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: EvolutionState,
    /// Right side at the new state; its `ω` is the re-solved amplitude.
    pub rhs: Rhs,
    pub dt: f64,
    pub error: f64,
    pub next_dt: f64,
    pub rejected: usize,
}

fn combine(base: &[C64], ks: &[Vec<C64>], weights: &[f64], dt: f64) -> Vec<C64> {
    let mut out = base.to_vec();
    for (k, &w) in ks.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(k) {
            *o += v * (w * dt);
        }
    }
    out
}

/// Spectral filter of the periodic part of a curve.
pub fn filter_curve(curve: &SampledCurve, threshold: f64) -> Result<SampledCurve> {
    if threshold <= 0.0 {
        return Ok(curve.clone());
    }
    let n = curve.n();
    let off = curve.offsets();
    let x = spectral::filter(&GridFunction::new(off.iter().map(|p| p.re).collect())?, threshold);
    let y = spectral::filter(&GridFunction::new(off.iter().map(|p| p.im).collect())?, threshold);
    let shift = curve.mode() == CurveMode::GraphPeriodic;
    let x: Vec<f64> = x
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| if shift { v + spectral::node(n, j) } else { *v })
        .collect();
    SampledCurve::new(curve.mode(), GridFunction::new(x)?, y)
}

/// Largest step allowed by the speed bound.
pub fn cfl_limit(curve: &SampledCurve, speed_bound: f64, safety: f64) -> f64 {
    let h = 2.0 * PI / curve.n() as f64;
    let min_speed = curve.tangent().iter().fold(f64::INFINITY, |m, t| m.min(t.norm()));
    if speed_bound > 0.0 {
        safety * h * min_speed / speed_bound
    } else {
        f64::INFINITY
    }
}

/// One accepted Dormand–Prince step starting from `state` with right side `k1`,
/// retrying with smaller steps until the local error meets `error_tol`.
pub fn step_from(state: &EvolutionState, k1: &Rhs, controls: &StepControls, dt_try: f64) -> Result<StepResult> {
    let base = state.curve.points();
    let mode = state.curve.mode();
    let cap = cfl_limit(&state.curve, k1.speed_bound, controls.cfl_safety).min(controls.dt_max);
    let remaining = controls.t_max - state.t;
    let mut dt = dt_try.min(cap).min(remaining.max(0.0));
    let mut rejected = 0;
    let mut last_err: Option<Error> = None;
    loop {
        if !(dt >= controls.dt_min) && dt < remaining {
            return Err(last_err.unwrap_or(Error::StepUnderflow { t: state.t, dt }));
        }
        let mut ks: Vec<Vec<C64>> = Vec::with_capacity(7);
        ks.push(k1.velocity.clone());
        let mut guess = Some(k1.solution.omega.clone());
        let mut failed = None;
        let mut last_rhs = None;
        for s in 1..7 {
            let pts = combine(&base, &ks, &A[s][..s], dt);
            let stage = SampledCurve::from_points(mode, &pts)
                .and_then(|c| rhs_for(&c, state.domain, &state.params, guess.as_ref(), &controls.solver));
            match stage {
                Ok(r) => {
                    guess = Some(r.solution.omega.clone());
                    ks.push(r.velocity.clone());
                    if s == 6 {
                        last_rhs = Some(r);
                    }
                }
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = failed {
            last_err = Some(e);
            rejected += 1;
            dt *= 0.25;
            continue;
        }
        let z5 = combine(&base, &ks, &B5, dt);
        let z4 = combine(&base, &ks, &B4, dt);
        let err = z5.iter().zip(&z4).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        let factor = if err > 0.0 {
            (0.9 * (controls.error_tol / err).powf(0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        if !(err <= controls.error_tol) {
            rejected += 1;
            dt *= factor.min(0.9);
            last_err = None;
            continue;
        }
        let raw = SampledCurve::from_points(mode, &z5)?;
        let curve = filter_curve(&raw, controls.filter_threshold)?;
        let mut next = state.clone();
        next.curve = curve;
        next.t = state.t + dt;
        let new_rhs = match last_rhs {
            Some(k) if controls.filter_threshold <= 0.0 => k,
            _ => rhs_for(&next.curve, next.domain, &next.params, guess.as_ref(), &controls.solver)?,
        };
        next.omega = Some(new_rhs.solution.omega.clone());
        return Ok(StepResult {
            state: next,
            rhs: new_rhs,
            dt,
            error: err,
            next_dt: dt * factor,
            rejected,
        });
    }
}

/// One accepted step from `state`.
pub fn step(state: &EvolutionState, controls: &StepControls, dt_try: f64) -> Result<StepResult> {
    let k1 = rhs_with(state, &controls.solver)?;
    step_from(state, &k1, controls, dt_try)
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    TimeLimit,
    SplashDistance,
    StepLimit,
    /// The state left the admissible set or an operation on it failed.
    Failure(Error),
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Record 0 describes the initial state; record `k` follows accepted step `k`.
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: EvolutionState,
    pub termination: Termination,
    pub steps: usize,
    pub rejected: usize,
    /// Sum of accepted local error estimates.
    pub error_sum: f64,
    pub splash_delta: f64,
    pub splash: SplashReport,
}

impl Trajectory {
    pub fn min_dist_series(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, r.min_dist)).collect()
    }
}

/// Diagnostics of a state whose `ω` and `BR` are known.
pub fn record_for(
    state: &EvolutionState,
    solution: &OmegaSolution,
    dt: f64,
    contact_separation: f64,
) -> Result<DiagnosticsRecord> {
    let physical = state.physical_curve()?;
    let energy = diagnostics::energy_with_br(&state.curve, Some(&solution.br), &state.params)?;
    let chord_arc = contour::chord_arc_constant(&physical);
    let closest: Option<ClosestPair> = contour::interface_min_distance(&physical, contact_separation).ok();
    Ok(DiagnosticsRecord {
        t: state.t,
        e3: energy.e3,
        parts: energy.parts,
        violation: energy.violation,
        sigma_min: energy.sigma_min,
        chord_arc,
        min_dist: closest.map_or(f64::NAN, |p| p.distance),
        closest,
        mean_omega: solution.omega.mean(),
        dt,
        arclength_spread: diagnostics::arclength_spread(&state.curve),
    })
}

/// Events passed to a run observer.
pub struct StepEvent<'a> {
    pub step: usize,
    pub state: &'a EvolutionState,
    pub solution: &'a OmegaSolution,
    pub record: &'a DiagnosticsRecord,
}

pub fn run(state: EvolutionState, controls: &StepControls) -> Result<Trajectory> {
    run_with(state, controls, |_| {})
}

/// Integrate until `t_max`, the splash distance, or a failure; the observer sees the
/// initial state as step 0 and every accepted step after it.
pub fn run_with(
    state: EvolutionState,
    controls: &StepControls,
    mut observer: impl FnMut(&StepEvent),
) -> Result<Trajectory> {
    controls.validate()?;
    let mut state = state;
    let mut k = rhs_with(&state, &controls.solver)?;
    state.omega = Some(k.solution.omega.clone());
    let physical = state.physical_curve()?;
    let splash_delta = controls.splash_delta.unwrap_or_else(|| default_splash_delta(&physical));
    let first = record_for(&state, &k.solution, 0.0, controls.contact_separation)?;
    observer(&StepEvent {
        step: 0,
        state: &state,
        solution: &k.solution,
        record: &first,
    });
    let mut records = alloc::vec![first];
    let (mut steps, mut rejected, mut error_sum) = (0, 0, 0.0);
    let mut dt = controls.dt_init;
    let termination = loop {
        if state.t >= controls.t_max * (1.0 - 1e-14) {
            break Termination::TimeLimit;
        }
        if records.last().is_some_and(|r| r.min_dist <= splash_delta) {
            break Termination::SplashDistance;
        }
        if steps >= controls.max_steps {
            break Termination::StepLimit;
        }
        let out = match step_from(&state, &k, controls, dt) {
            Ok(o) => o,
            Err(e) => break Termination::Failure(e),
        };
        let record = match record_for(&out.state, &out.rhs.solution, out.dt, controls.contact_separation) {
            Ok(r) => r,
            Err(e) => break Termination::Failure(e),
        };
        steps += 1;
        rejected += out.rejected;
        error_sum += out.error;
        dt = out.next_dt;
        state = out.state;
        k = out.rhs;
        observer(&StepEvent {
            step: steps,
            state: &state,
            solution: &k.solution,
            record: &record,
        });
        records.push(record);
    };
    let series: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.min_dist)).collect();
    let splash = diagnostics::splash_monitor(
        &series,
        records.last().and_then(|r| r.closest.as_ref()),
        termination == Termination::SplashDistance,
    );
    Ok(Trajectory {
        records,
        final_state: state,
        termination,
        steps,
        rejected,
        error_sum,
        splash_delta,
        splash,
    })
}
