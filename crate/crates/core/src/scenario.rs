//! TOML scenario files.
//!
//! ```toml
//! method = "squint-only"        # squint-only | squint-split | exhaustive
//! spacing_ratio = 1.0           # P, spacing in half carrier wavelengths
//! carrier = "30GHz"             # Hz, number or string with unit suffix
//! bandwidth = "6GHz"
//! aod_range_deg = [-80.0, 80.0]
//! sensing_range_deg = [-80.0, 80.0]   # optional
//! snr_db = [0.0, 10.0, 20.0, inf]
//! subcarriers = [1024, 50000]
//! antennas = [128]
//! trials = 500
//! seed = 0                      # optional, default 0
//! users_per_trial = 1           # optional, default 1
//! uncovered = "exclude"         # optional: exclude | midpoint
//! output = "results.csv"        # optional
//! ```
//!
//! Without `sensing_range_deg`, squint-only and exhaustive sensing cover the
//! AoD range and squint-split picks an overlap-free design by grid search.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiments::{Method, ScenarioConfig, UncoveredPolicy};
use crate::sensing::suggest_split_range;

/// Largest validation shift, degrees, a suggested split design must tolerate.
pub const SUGGEST_ROBUST_SHIFT_DEG: f64 = 2.0;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(String),
}

/// Parses `"30GHz"`, `"6 GHz"`, `"2.5e9"`, `"800MHz"` and the like into Hz.
pub fn parse_frequency(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let split = t
        .char_indices()
        .find(|&(i, c)| c.is_ascii_alphabetic() && !(matches!(c, 'e' | 'E') && is_exponent(t, i)))
        .map_or(t.len(), |(i, _)| i);
    let (num, unit) = t.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("`{text}` is not a frequency"))?;
    let scale = match unit.trim().to_ascii_lowercase().as_str() {
        "" | "hz" => 1.0,
        "khz" => 1e3,
        "mhz" => 1e6,
        "ghz" => 1e9,
        "thz" => 1e12,
        other => return Err(format!("unknown frequency unit `{other}` in `{text}`")),
    };
    Ok(value * scale)
}

fn is_exponent(t: &str, i: usize) -> bool {
    let next = t[i + 1..].chars().next();
    i > 0 && next.is_some_and(|c| c.is_ascii_digit() || c == '-' || c == '+')
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Frequency {
    Hz(f64),
    Text(String),
}

impl Frequency {
    fn hz(&self) -> Result<f64, String> {
        match self {
            Frequency::Hz(v) => Ok(*v),
            Frequency::Text(s) => parse_frequency(s),
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    method: Method,
    spacing_ratio: f64,
    carrier: Frequency,
    bandwidth: Frequency,
    #[serde(default = "one")]
    users_per_trial: usize,
    aod_range_deg: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sensing_range_deg: Option<[f64; 2]>,
    snr_db: Vec<f64>,
    subcarriers: Vec<usize>,
    antennas: Vec<usize>,
    trials: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    uncovered: UncoveredPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<PathBuf>,
}

/// A scenario with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub output: Option<PathBuf>,
}

fn line_column(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |p| before.len() - p - 1)
        + 1;
    (line, column)
}

pub fn parse_scenario(source: &str) -> Result<ResolvedScenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(source).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(source, s.start));
        ScenarioError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    resolve(file)
}

fn resolve(file: ScenarioFile) -> Result<ResolvedScenario, ScenarioError> {
    let carrier_hz = file.carrier.hz().map_err(ScenarioError::Invalid)?;
    let bandwidth_hz = file.bandwidth.hz().map_err(ScenarioError::Invalid)?;
    let aod = (file.aod_range_deg[0], file.aod_range_deg[1]);
    let mut config = ScenarioConfig {
        method: file.method,
        spacing_ratio: file.spacing_ratio,
        carrier_hz,
        bandwidth_hz,
        users_per_trial: file.users_per_trial,
        aod_range_deg: aod,
        sensing_range_deg: aod,
        snr_db: file.snr_db,
        subcarriers: file.subcarriers,
        antennas: file.antennas,
        trials: file.trials,
        seed: file.seed,
        uncovered: file.uncovered,
    };
    config.sensing_range_deg = match (file.sensing_range_deg, file.method) {
        (Some([a, b]), _) => (a, b),
        (None, Method::SquintSplit) => {
            let (&m, &n) = config
                .antennas
                .first()
                .zip(config.subcarriers.first())
                .ok_or_else(|| {
                    ScenarioError::Invalid("antennas and subcarriers must be nonempty".into())
                })?;
            let system = config
                .system(m, n)
                .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
            suggest_split_range(&system, aod, SUGGEST_ROBUST_SHIFT_DEG)
                .map_err(|e| ScenarioError::Invalid(format!("no usable split design: {e}")))?
        }
        (None, _) => aod,
    };
    config
        .validate()
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    Ok(ResolvedScenario {
        config,
        output: file.output,
    })
}

/// Writes a scenario back out with every field explicit.
pub fn to_toml(scenario: &ResolvedScenario) -> String {
    let c = &scenario.config;
    let file = ScenarioFile {
        method: c.method,
        spacing_ratio: c.spacing_ratio,
        carrier: Frequency::Hz(c.carrier_hz),
        bandwidth: Frequency::Hz(c.bandwidth_hz),
        users_per_trial: c.users_per_trial,
        aod_range_deg: [c.aod_range_deg.0, c.aod_range_deg.1],
        sensing_range_deg: Some([c.sensing_range_deg.0, c.sensing_range_deg.1]),
        snr_db: c.snr_db.clone(),
        subcarriers: c.subcarriers.clone(),
        antennas: c.antennas.clone(),
        trials: c.trials,
        seed: c.seed,
        uncovered: c.uncovered,
        output: scenario.output.clone(),
    };
    toml::to_string(&file).expect("scenario fields serialize")
}
