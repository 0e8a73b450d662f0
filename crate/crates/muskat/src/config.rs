//! Flat `key = value` run configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Selftest,
    Flat,
    Decay,
    Splash,
    Stability,
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "selftest" => Ok(Scenario::Selftest),
            "flat" => Ok(Scenario::Flat),
            "decay" => Ok(Scenario::Decay),
            "splash" => Ok(Scenario::Splash),
            "stability" => Ok(Scenario::Stability),
            other => Err(format!(
                "unknown scenario `{other}` (expected selftest, flat, decay, splash or stability)"
            )),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Scenario::Selftest => "selftest",
            Scenario::Flat => "flat",
            Scenario::Decay => "decay",
            Scenario::Splash => "splash",
            Scenario::Stability => "stability",
        };
        f.write_str(name)
    }
}

/// A validated run configuration with every default resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub rho0: f64,
    pub mu0: f64,
    pub neck_width: f64,
    pub perturb_amplitude: f64,
    pub t_max: f64,
    pub error_tol: f64,
    pub filter_threshold: f64,
    pub splash_delta: f64,
    pub snapshot_every: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Direction of the square-root cut in radians; `None` aims it at the contact point.
    pub branch_cut_direction: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

/// A configuration error tied to a line of the input; line 0 means the file as a whole.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line,
            message: message.into(),
        }
    }
}

pub const KEYS: [&str; 14] = [
    "scenario",
    "n",
    "rho0",
    "mu0",
    "neck_width",
    "perturb_amplitude",
    "t_max",
    "error_tol",
    "filter_threshold",
    "splash_delta",
    "snapshot_every",
    "output_dir",
    "seed",
    "branch_cut_direction",
];

#[derive(Default)]
struct Raw {
    scenario: Option<Scenario>,
    n: Option<usize>,
    rho0: Option<f64>,
    mu0: Option<f64>,
    neck_width: Option<f64>,
    perturb_amplitude: Option<f64>,
    t_max: Option<f64>,
    error_tol: Option<f64>,
    filter_threshold: Option<f64>,
    splash_delta: Option<f64>,
    snapshot_every: Option<usize>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
    branch_cut_direction: Option<f64>,
}

fn number(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = value
        .parse()
        .map_err(|_| ConfigError::new(line, format!("{key} must be a number, got `{value}`")))?;
    if !v.is_finite() {
        return Err(ConfigError::new(line, format!("{key} must be finite")));
    }
    Ok(v)
}

fn integer<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::new(line, format!("{key} must be a nonnegative integer, got `{value}`")))
}

fn check(line: usize, ok: bool, message: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(line, message))
    }
}

fn assign(raw: &mut Raw, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
    match key {
        "scenario" => raw.scenario = Some(value.parse().map_err(|e| ConfigError::new(line, e))?),
        "n" => {
            let n: usize = integer(line, key, value)?;
            check(line, n.is_power_of_two(), "n must be a power of two")?;
            check(line, (16..=4096).contains(&n), "n must lie in [16, 4096]")?;
            raw.n = Some(n);
        }
        "rho0" => {
            let v = number(line, key, value)?;
            check(line, v > 0.0, "rho0 must be positive")?;
            raw.rho0 = Some(v);
        }
        "mu0" => {
            let v = number(line, key, value)?;
            check(line, v > 0.0, "mu0 must be positive")?;
            raw.mu0 = Some(v);
        }
        "neck_width" => {
            let v = number(line, key, value)?;
            check(line, (0.0..=1.0).contains(&v), "neck_width must lie in [0, 1]")?;
            raw.neck_width = Some(v);
        }
        "perturb_amplitude" => {
            let v = number(line, key, value)?;
            check(line, (0.0..=0.1).contains(&v), "perturb_amplitude must lie in [0, 0.1]")?;
            raw.perturb_amplitude = Some(v);
        }
        "t_max" => {
            let v = number(line, key, value)?;
            check(line, v > 0.0 && v <= 1e4, "t_max must lie in (0, 1e4]")?;
            raw.t_max = Some(v);
        }
        "error_tol" => {
            let v = number(line, key, value)?;
            check(line, v > 0.0 && v <= 1e-2, "error_tol must lie in (0, 1e-2]")?;
            raw.error_tol = Some(v);
        }
        "filter_threshold" => {
            let v = number(line, key, value)?;
            check(
                line,
                (0.0..=1e-6).contains(&v),
                "filter_threshold must lie in [0, 1e-6]",
            )?;
            raw.filter_threshold = Some(v);
        }
        "splash_delta" => {
            let v = number(line, key, value)?;
            check(line, v > 0.0 && v < 0.1, "splash_delta must lie in (0, 0.1)")?;
            raw.splash_delta = Some(v);
        }
        "snapshot_every" => {
            let v: usize = integer(line, key, value)?;
            check(line, v >= 1, "snapshot_every must be at least 1")?;
            raw.snapshot_every = Some(v);
        }
        "output_dir" => raw.output_dir = Some(PathBuf::from(value)),
        "seed" => raw.seed = Some(integer(line, key, value)?),
        "branch_cut_direction" => {
            let v = number(line, key, value)?;
            check(
                line,
                v > -std::f64::consts::PI && v <= std::f64::consts::PI,
                "branch_cut_direction must lie in (-pi, pi]",
            )?;
            raw.branch_cut_direction = Some(v);
        }
        _ => return Err(ConfigError::new(line, format!("unknown key `{key}`"))),
    }
    Ok(())
}

/// Parse a configuration. Lines are `key = value`; `#` starts a comment; blank lines
/// are ignored. Absent keys take the documented per-scenario defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut raw = Raw::default();
    let mut seen: Vec<&str> = Vec::new();
    for (index, full) in text.lines().enumerate() {
        let line = index + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::new(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::new(line, "missing key before `=`"));
        }
        if value.is_empty() {
            return Err(ConfigError::new(line, format!("missing value for `{key}`")));
        }
        if let Some(known) = KEYS.iter().find(|k| **k == key) {
            if seen.contains(known) {
                return Err(ConfigError::new(line, format!("duplicate key `{key}`")));
            }
            seen.push(known);
        }
        assign(&mut raw, line, key, value)?;
    }
    Ok(resolve(raw))
}

fn resolve(raw: Raw) -> ScenarioConfig {
    let scenario = raw.scenario.unwrap_or(Scenario::Selftest);
    let (n, t_max, amplitude) = match scenario {
        Scenario::Selftest => (256, 0.1, 1e-3),
        Scenario::Flat => (256, 1e4, 0.0),
        Scenario::Decay => (256, 0.5, 1e-4),
        Scenario::Splash => (512, 1.0, 1e-3),
        Scenario::Stability => (256, 0.5, 1e-3),
    };
    ScenarioConfig {
        scenario,
        n: raw.n.unwrap_or(n),
        rho0: raw.rho0.unwrap_or(1.0),
        mu0: raw.mu0.unwrap_or(1.0),
        neck_width: raw.neck_width.unwrap_or(0.05),
        perturb_amplitude: raw.perturb_amplitude.unwrap_or(amplitude),
        t_max: raw.t_max.unwrap_or(t_max),
        error_tol: raw.error_tol.unwrap_or(1e-8),
        filter_threshold: raw.filter_threshold.unwrap_or(1e-13),
        splash_delta: raw.splash_delta.unwrap_or(1e-3),
        snapshot_every: raw.snapshot_every.unwrap_or(10),
        output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("muskat-out")),
        seed: raw.seed.unwrap_or(0),
        branch_cut_direction: raw.branch_cut_direction,
    }
}
