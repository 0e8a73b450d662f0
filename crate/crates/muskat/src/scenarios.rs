//! Scenario orchestration: runs, artifacts and the manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use muskat_core::birkhoff_rott::{Domain, FluidParams, OmegaSolution};
use muskat_core::conformal::BranchSpec;
use muskat_core::contour::{self, SampledCurve, SplashCurveParams};
use muskat_core::diagnostics::{self, DiagnosticsRecord, StabilityRecord};
use muskat_core::evolution::{self, EvolutionState, StepControls, StepEvent, Termination, Trajectory};
use muskat_core::spectral::{self, GridFunction};
use serde_json::json;

use crate::checks::{self, SplashTimes, StabilitySeries};
use crate::config::{Scenario, ScenarioConfig};
use crate::error::{RunError, EXIT_CHECK_FAILED, EXIT_OK};
use crate::output::{self, CheckOutcome, DiagnosticsWriter, RunManifest, SnapshotRow, SplashSummary};

/// What a scenario produced besides its files.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub termination: String,
    pub splash: Option<SplashSummary>,
    pub results: serde_json::Value,
    pub checks: Vec<CheckOutcome>,
}

/// A finished run: its manifest, where it was written, and the process exit code.
#[derive(Debug, Clone)]
pub struct Finished {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    pub exit_code: i32,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Run a scenario into `config.output_dir` and write the manifest last. Errors are
/// returned only when no manifest can be written.
pub fn execute(config: &ScenarioConfig) -> Result<Finished, RunError> {
    output::ensure_dir(&config.output_dir)?;
    let start_time = now();
    let (termination, splash, results, acceptance, exit_code) = match run_scenario(config) {
        Ok(o) => {
            let code = if o.checks.iter().all(|c| c.passed) {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            };
            (o.termination, o.splash, o.results, o.checks, code)
        }
        Err(e) => (format!("error: {e}"), None, json!({}), Vec::new(), e.exit_code()),
    };
    let manifest = RunManifest {
        config: config.clone(),
        start_time,
        end_time: now(),
        termination,
        exit_code,
        splash,
        results,
        acceptance,
    };
    let manifest_path = output::write_manifest(&config.output_dir, &manifest)?;
    Ok(Finished {
        manifest,
        manifest_path,
        exit_code,
    })
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome, RunError> {
    let params = FluidParams::new(config.rho0, config.mu0)?;
    match config.scenario {
        Scenario::Selftest => selftest(config, params),
        Scenario::Flat => flat(config, params),
        Scenario::Decay => decay(config, params),
        Scenario::Splash => splash(config, params),
        Scenario::Stability => stability(config, params),
    }
}

fn controls(config: &ScenarioConfig) -> StepControls {
    StepControls {
        t_max: config.t_max,
        error_tol: config.error_tol,
        filter_threshold: config.filter_threshold,
        splash_delta: Some(config.splash_delta),
        ..Default::default()
    }
}

/// Samples of a state for a snapshot file: the evolved curve with its `ω` and `σ`
/// (`σ̃` for tilde states).
pub fn snapshot_rows(state: &EvolutionState, solution: &OmegaSolution) -> muskat_core::Result<Vec<SnapshotRow>> {
    let sigma = match state.domain {
        Domain::Physical => diagnostics::sigma_from(&solution.br, &state.curve.tangent(), &state.params)?,
        Domain::Tilde => diagnostics::sigma_tilde_from(&state.curve, &solution.br, &state.params)?.0,
    };
    Ok(spectral::nodes(state.curve.n())
        .into_iter()
        .zip(state.curve.points())
        .zip(solution.omega.values())
        .zip(sigma.values())
        .map(|(((alpha, point), &omega), &sigma)| SnapshotRow {
            alpha,
            point,
            omega,
            sigma,
        })
        .collect())
}

/// Writes the diagnostics series and cadence snapshots of one (possibly segmented) run.
struct Recorder {
    dir: PathBuf,
    every: usize,
    diagnostics: Option<DiagnosticsWriter>,
    offset: usize,
    pending: Option<(usize, Vec<SnapshotRow>)>,
    error: Option<RunError>,
}

impl Recorder {
    fn new(dir: &Path, every: usize) -> Result<Self, RunError> {
        Ok(Recorder {
            dir: dir.to_path_buf(),
            every,
            diagnostics: Some(DiagnosticsWriter::create(&dir.join("diagnostics.csv"))?),
            offset: 0,
            pending: None,
            error: None,
        })
    }

    fn observe(&mut self, event: &StepEvent, continuation: bool) {
        if self.error.is_some() || (continuation && event.step == 0) {
            return;
        }
        let global = self.offset + event.step;
        if let Err(e) = self.record(global, event) {
            self.error = Some(e);
        }
    }

    fn record(&mut self, global: usize, event: &StepEvent) -> Result<(), RunError> {
        if let Some(w) = self.diagnostics.as_mut() {
            w.push(event.record)?;
        }
        let rows = snapshot_rows(event.state, event.solution)?;
        if global.is_multiple_of(self.every) {
            output::write_snapshot(&self.dir.join(format!("snap_{global}.csv")), &rows)?;
            self.pending = None;
        } else {
            self.pending = Some((global, rows));
        }
        Ok(())
    }

    fn advance(&mut self, steps: usize) {
        self.offset += steps;
    }

    /// Write the last state if the cadence skipped it, and close the series.
    fn finish(mut self) -> Result<(), RunError> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        if let Some((step, rows)) = self.pending.take() {
            output::write_snapshot(&self.dir.join(format!("snap_{step}.csv")), &rows)?;
        }
        if let Some(w) = self.diagnostics.take() {
            w.finish()?;
        }
        Ok(())
    }
}

fn evolve(
    state: EvolutionState,
    controls: &StepControls,
    mut recorder: Option<&mut Recorder>,
    continuation: bool,
    mut extra: impl FnMut(&StepEvent),
) -> Result<Trajectory, RunError> {
    let traj = evolution::run_with(state, controls, |e| {
        if let Some(r) = recorder.as_deref_mut() {
            r.observe(e, continuation);
        }
        extra(e);
    })?;
    if let Some(r) = recorder {
        r.advance(traj.steps);
    }
    Ok(traj)
}

fn failure(traj: &Trajectory) -> Option<muskat_core::Error> {
    match &traj.termination {
        Termination::Failure(e) => Some(e.clone()),
        _ => None,
    }
}

fn termination_name(t: &Termination) -> String {
    match t {
        Termination::TimeLimit => "time limit".into(),
        Termination::SplashDistance => "splash distance".into(),
        Termination::StepLimit => "step limit".into(),
        Termination::Failure(e) => format!("failure: {e}"),
    }
}

fn selftest(config: &ScenarioConfig, params: FluidParams) -> Result<ScenarioOutcome, RunError> {
    let n = config.n;
    let equivalence = checks::tilde_physical_equivalence(n, params, config.t_max)?;
    let phys = &equivalence.physical.records;
    let tilde = &equivalence.tilde.records;
    let checks = vec![
        checks::operator_exactness(n)?,
        checks::second_kind_solve(n, config.seed, params)?,
        checks::spectral_convergence(n)?,
        checks::conformal_consistency(2 * n)?,
        equivalence.outcome.clone(),
        checks::arclength_equalization(&[("equivalence", tilde)]),
        checks::energy_boundedness(&[("physical", phys), ("tilde", tilde)]),
    ];
    Ok(ScenarioOutcome {
        termination: "completed".into(),
        splash: None,
        results: json!({
            "equivalence_steps": [equivalence.physical.steps, equivalence.tilde.steps],
            "equivalence_error_sum": equivalence.physical.error_sum + equivalence.tilde.error_sum,
        }),
        checks,
    })
}

fn flat(config: &ScenarioConfig, params: FluidParams) -> Result<ScenarioOutcome, RunError> {
    let start = SampledCurve::flat(config.n)?;
    let controls = StepControls {
        dt_max: 10.0,
        max_steps: 100,
        ..controls(config)
    };
    let mut recorder = Recorder::new(&config.output_dir, config.snapshot_every)?;
    let mut max_omega = 0.0f64;
    let traj = evolve(
        checks::physical_state(start.clone(), params)?,
        &controls,
        Some(&mut recorder),
        false,
        |e| max_omega = max_omega.max(e.solution.omega.max_abs()),
    )?;
    recorder.finish()?;
    if let Some(e) = failure(&traj) {
        return Err(e.into());
    }
    let displacement = traj
        .final_state
        .curve
        .points()
        .iter()
        .zip(start.points())
        .fold(0.0f64, |m, (p, q)| m.max((p - q).norm()));
    let steady = CheckOutcome::new(
        checks::STEADY_STATE,
        traj.steps == 100 && displacement < 1e-10,
        format!(
            "{} steps to t = {:.3e}: max displacement {displacement:.2e}, max |ω| {max_omega:.2e}",
            traj.steps, traj.final_state.t
        ),
    );
    Ok(ScenarioOutcome {
        termination: termination_name(&traj.termination),
        splash: None,
        results: json!({
            "steps": traj.steps,
            "final_t": traj.final_state.t,
            "max_displacement": displacement,
            "max_abs_omega": max_omega,
        }),
        checks: vec![steady, checks::energy_boundedness(&[("flat", &traj.records)])],
    })
}

fn decay(config: &ScenarioConfig, params: FluidParams) -> Result<ScenarioOutcome, RunError> {
    let n = config.n;
    let eps = config.perturb_amplitude;
    let jacobian = checks::jacobian_mode1(n, params)?;
    let zero = GridFunction::zeros(n)?;
    let cos = GridFunction::from_fn(n, f64::cos)?;
    let start = contour::perturb(&SampledCurve::flat(n)?, eps, (&zero, &cos))?;
    let controls = StepControls {
        dt_max: 0.02,
        ..controls(config)
    };
    let mut recorder = Recorder::new(&config.output_dir, config.snapshot_every)?;
    let mut amplitude = Vec::new();
    let mut sup = Vec::new();
    let traj = evolve(
        checks::physical_state(start, params)?,
        &controls,
        Some(&mut recorder),
        false,
        |e| {
            let y = e.state.curve.y();
            amplitude.push((e.state.t, 2.0 * y.spectrum().coefficient(1).re));
            sup.push(y.max_abs());
        },
    )?;
    recorder.finish()?;
    if let Some(e) = failure(&traj) {
        return Err(e.into());
    }
    let rate = diagnostics::decay_rate_fit(&amplitude).ok();
    Ok(ScenarioOutcome {
        termination: termination_name(&traj.termination),
        splash: None,
        results: json!({
            "steps": traj.steps,
            "jacobian_mode1": jacobian,
            "fitted_rate": rate,
            "initial_amplitude": amplitude.first().map(|a| a.1),
            "final_amplitude": amplitude.last().map(|a| a.1),
        }),
        checks: vec![
            checks::linear_decay(&amplitude, &sup, jacobian),
            checks::energy_boundedness(&[("decay", &traj.records)]),
        ],
    })
}

fn splash_branch(config: &ScenarioConfig, family: &SplashCurveParams) -> muskat_core::Result<BranchSpec> {
    match config.branch_cut_direction {
        Some(d) => BranchSpec::with_direction(d),
        None => BranchSpec::through(family.contact_point()),
    }
}

/// Perturbed near-splash datum mapped to the tilde plane at equal arclength.
fn splash_initial_state(config: &ScenarioConfig, params: FluidParams, n: usize) -> muskat_core::Result<EvolutionState> {
    let family = SplashCurveParams {
        neck_width: config.neck_width,
        ..Default::default()
    };
    let branch = splash_branch(config, &family)?;
    let curve = contour::make_splash_curve(&family, n)?;
    let zero = GridFunction::zeros(n)?;
    let cos = GridFunction::from_fn(n, f64::cos)?;
    let perturbed = contour::perturb(&curve, config.perturb_amplitude, (&zero, &cos))?;
    let (tilde, _) = contour::to_tilde_equal_arclength(&perturbed, &branch, n)?;
    EvolutionState::new(Domain::Tilde, tilde, params, branch)
}

fn splash(config: &ScenarioConfig, params: FluidParams) -> Result<ScenarioOutcome, RunError> {
    let n = config.n;
    let exact = SplashCurveParams {
        neck_width: 0.0,
        ..Default::default()
    };
    let validation =
        contour::validate_splash_curve(&contour::make_splash_curve(&exact, n)?, &splash_branch(config, &exact)?);
    if !validation.is_splash {
        return Err(muskat_core::Error::Construction("the neck-0 member of the family is not a splash curve").into());
    }
    let base_controls = controls(config);
    let mut recorder = Recorder::new(&config.output_dir, config.snapshot_every)?;
    let base = evolve(
        splash_initial_state(config, params, n)?,
        &base_controls,
        Some(&mut recorder),
        false,
        |_| {},
    )?;
    recorder.finish()?;
    if let Some(e) = failure(&base) {
        return Err(e.into());
    }
    let refined = evolution::run(splash_initial_state(config, params, 2 * n)?, &base_controls)?;
    let tight_controls = StepControls {
        error_tol: config.error_tol / 10.0,
        ..base_controls
    };
    let tight = evolution::run(splash_initial_state(config, params, n)?, &tight_controls)?;
    let times = SplashTimes {
        base: base.splash.t_s,
        refined: refined.splash.t_s,
        tight: tight.splash.t_s,
    };
    let velocity = checks::velocity_sign(&[0.05, 0.2], n, params)?;
    let last = base.records.last();
    let results = json!({
        "domain": "tilde",
        "steps": base.steps,
        "rejected": base.rejected,
        "final_t": base.final_state.t,
        "splash_delta": base.splash_delta,
        "t_s": times.base,
        "t_s_refined": times.refined,
        "t_s_tight_tolerance": times.tight,
        "refined_termination": termination_name(&refined.termination),
        "tight_termination": termination_name(&tight.termination),
        "final_min_dist": last.map(|r| r.min_dist),
        "final_chord_arc": last.map(|r| r.chord_arc),
        "min_sigma": base.records.iter().map(|r| r.sigma_min).fold(f64::INFINITY, f64::min),
        "final_sigma_min": last.map(|r| r.sigma_min),
        "family_contact_point": [validation.x_s.re, validation.x_s.im],
    });
    let checks = vec![
        checks::finite_time_splash(&base, &times, config.splash_delta),
        checks::arclength_equalization(&[
            ("base", &base.records),
            ("refined", &refined.records),
            ("tight", &tight.records),
        ]),
        velocity,
        checks::energy_boundedness(&[("splash", &base.records)]),
    ];
    Ok(ScenarioOutcome {
        termination: termination_name(&base.termination),
        splash: Some(SplashSummary::from(&base.splash)),
        results,
        checks,
    })
}

const STABILITY_SAMPLES: usize = 10;

fn stability(config: &ScenarioConfig, params: FluidParams) -> Result<ScenarioOutcome, RunError> {
    let n = config.n;
    let eps = config.perturb_amplitude;
    let base = checks::reference_graph(n)?;
    let zero = GridFunction::zeros(n)?;
    let cos = GridFunction::from_fn(n, f64::cos)?;
    let mut states = [
        checks::physical_state(base.clone(), params)?,
        checks::physical_state(contour::perturb(&base, eps, (&zero, &cos))?, params)?,
        checks::physical_state(contour::perturb(&base, eps / 10.0, (&zero, &cos))?, params)?,
    ];
    let distance = |a: &EvolutionState, b: &EvolutionState| -> muskat_core::Result<f64> {
        diagnostics::h1_distance(
            &contour::resample_as_graph(&a.curve)?,
            &contour::resample_as_graph(&b.curve)?,
        )
    };
    let mut samples = vec![(
        0.0,
        distance(&states[0], &states[1])?,
        distance(&states[0], &states[2])?,
    )];
    let mut records: [Vec<DiagnosticsRecord>; 3] = Default::default();
    let mut recorder = Recorder::new(&config.output_dir, config.snapshot_every)?;
    let mut window_end = None;
    'segments: for k in 1..=STABILITY_SAMPLES {
        let segment = StepControls {
            t_max: config.t_max * k as f64 / STABILITY_SAMPLES as f64,
            ..controls(config)
        };
        let mut next = Vec::with_capacity(3);
        for (j, state) in states.iter().enumerate() {
            let traj = evolve(
                state.clone(),
                &segment,
                if j == 1 { Some(&mut recorder) } else { None },
                k > 1,
                |_| {},
            )?;
            let skip = usize::from(k > 1);
            records[j].extend(traj.records.iter().skip(skip).copied());
            if traj.termination != Termination::TimeLimit {
                window_end = Some(termination_name(&traj.termination));
                break 'segments;
            }
            next.push(traj.final_state);
        }
        states = [next[0].clone(), next[1].clone(), next[2].clone()];
        samples.push((
            states[0].t,
            distance(&states[0], &states[1])?,
            distance(&states[0], &states[2])?,
        ));
    }
    recorder.finish()?;
    let initial = samples[0];
    let large: Vec<StabilityRecord> = samples
        .iter()
        .map(|s| StabilityRecord::new(s.0, s.1, initial.1))
        .collect();
    let small: Vec<StabilityRecord> = samples
        .iter()
        .map(|s| StabilityRecord::new(s.0, s.2, initial.2))
        .collect();
    output::write_stability(&config.output_dir.join("stability.csv"), &large)?;
    output::write_stability(&config.output_dir.join("stability_tenth.csv"), &small)?;
    let series = StabilitySeries {
        samples: samples.clone(),
        amplitude: eps,
    };
    let last = samples[samples.len() - 1];
    let results = json!({
        "h1_initial": [initial.1, initial.2],
        "h1_final": [last.1, last.2],
        "window_end_t": last.0,
        "window_cut_by": window_end,
        "max_log_slope": series.max_log_slope(),
        "final_ratio": last.2 / last.1,
    });
    Ok(ScenarioOutcome {
        termination: window_end.unwrap_or_else(|| termination_name(&Termination::TimeLimit)),
        splash: None,
        results,
        checks: vec![
            checks::stability(&series),
            checks::energy_boundedness(&[
                ("base", &records[0]),
                ("perturbed", &records[1]),
                ("perturbed/10", &records[2]),
            ]),
        ],
    })
}
