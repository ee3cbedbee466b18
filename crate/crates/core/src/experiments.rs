//! Monte-Carlo harness: RMSE versus SNR, subcarrier count and array size.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{asin_deg, design_frontend, sin_deg, FrontendDesign};
use crate::model::{SystemConfig, UserTruth};
use crate::sensing::{
    nearest_pair, run_split_session, run_squint_session, split_sensing_ranges, BlockCounter,
    NoiseModel, SenseError, SubcarrierGrid,
};

/// Keeps noise draws independent of the angle draws that share the seed.
const NOISE_KEY: u64 = 0x5DEE_CE66_D1CE_4E5B;

pub const CSV_HEADER: [&str; 13] = [
    "method",
    "M",
    "N",
    "P",
    "snr_db",
    "aod_lo",
    "aod_hi",
    "range_lo",
    "range_hi",
    "trials",
    "rmse_deg",
    "coverage_rate",
    "blocks",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error(transparent)]
    Sense(#[from] SenseError),
    #[error("statistic undefined: no estimates to average")]
    Undefined,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[cfg_attr(feature = "cli", derive(clap::ValueEnum))]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// One wide rainbow sweep, `P = 1`.
    #[serde(alias = "squint")]
    #[cfg_attr(feature = "cli", value(alias = "squint"))]
    SquintOnly,
    /// Sweep plus grating branches, resolved by a second block.
    #[serde(alias = "split")]
    #[cfg_attr(feature = "cli", value(alias = "split"))]
    SquintSplit,
    /// Narrowband beam sweep over `Q` codewords, one block each.
    #[serde(alias = "sweep")]
    #[cfg_attr(feature = "cli", value(alias = "sweep"))]
    Exhaustive,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::SquintOnly => "squint-only",
            Method::SquintSplit => "squint-split",
            Method::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "squint-only" | "squint" => Ok(Method::SquintOnly),
            "squint-split" | "split" => Ok(Method::SquintSplit),
            "exhaustive" | "sweep" => Ok(Method::Exhaustive),
            _ => Err(format!("unknown method `{s}`")),
        }
    }
}

/// OFDM blocks one sensing round costs.
pub fn time_overhead(method: Method, q_directions: usize) -> usize {
    match method {
        Method::SquintOnly => 1,
        Method::SquintSplit => 2,
        Method::Exhaustive => {
            assert!(
                q_directions >= 1,
                "exhaustive sweep needs at least one direction"
            );
            q_directions
        }
    }
}

/// `σ² = ‖a‖²/10^(SNR/10)` with `‖a‖² = M`.
pub fn snr_to_noise(config: &SystemConfig, snr_db: f64) -> f64 {
    config.antenna_count as f64 / 10f64.powf(snr_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UncoveredPolicy {
    /// Leave uncovered users out of the RMSE.
    #[default]
    Exclude,
    /// Score uncovered users as if sensed at the middle of the sensing range.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub truth_deg: f64,
    pub estimate_deg: Option<f64>,
    pub covered: bool,
    pub blocks_used: usize,
}

/// `sqrt(mean over trials of mean over users of squared error)`, degrees.
///
/// Users without an estimate are skipped; trials left empty are skipped.
pub fn rmse(trials: &[Vec<TrialResult>]) -> Result<f64, ExperimentError> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for trial in trials {
        let errs: Vec<f64> = trial
            .iter()
            .filter_map(|r| r.estimate_deg.map(|e| (e - r.truth_deg).powi(2)))
            .collect();
        if !errs.is_empty() {
            sum += errs.iter().sum::<f64>() / errs.len() as f64;
            count += 1;
        }
    }
    if count == 0 {
        return Err(ExperimentError::Undefined);
    }
    Ok((sum / count as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub method: Method,
    pub spacing_ratio: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub users_per_trial: usize,
    pub aod_range_deg: (f64, f64),
    /// `(ϑ_0, ϑ_c)`. For the exhaustive sweep, the codebook span.
    pub sensing_range_deg: (f64, f64),
    pub snr_db: Vec<f64>,
    /// Subcarrier counts `N`; for the exhaustive sweep, codebook sizes `Q`.
    pub subcarriers: Vec<usize>,
    pub antennas: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub uncovered: UncoveredPolicy,
}

impl ScenarioConfig {
    pub fn system(
        &self,
        antennas: usize,
        subcarriers: usize,
    ) -> Result<SystemConfig, ExperimentError> {
        SystemConfig::new(
            antennas,
            self.spacing_ratio,
            self.carrier_hz,
            self.bandwidth_hz,
            subcarriers.max(2),
            1,
        )
        .map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.users_per_trial == 0 {
            return bad("users_per_trial must be at least 1".into());
        }
        if self.snr_db.is_empty() || self.subcarriers.is_empty() || self.antennas.is_empty() {
            return bad("snr_db, subcarriers and antennas must be nonempty".into());
        }
        if let Some(s) = self
            .snr_db
            .iter()
            .find(|s| s.is_nan() || **s == f64::NEG_INFINITY)
        {
            return bad(format!("SNR {s} dB is not usable"));
        }
        let (lo, hi) = self.aod_range_deg;
        if !(lo > -90.0 && hi < 90.0 && lo < hi) {
            return bad(format!(
                "AoD range [{lo}, {hi}] must be increasing inside (-90, 90)"
            ));
        }
        let (t0, tc) = self.sensing_range_deg;
        if !(t0.abs() < 90.0 && tc.abs() < 90.0) || t0 == tc {
            return bad(format!(
                "sensing range ({t0}, {tc}) must be two distinct angles inside (-90, 90)"
            ));
        }
        for &m in &self.antennas {
            for &n in &self.subcarriers {
                self.system(m, n)?;
            }
        }
        let config = self.system(self.antennas[0], self.subcarriers[0])?;
        match self.method {
            Method::SquintOnly if (self.spacing_ratio - 1.0).abs() > 1e-12 => bad(format!(
                "squint-only sensing needs spacing_ratio = 1, got {}",
                self.spacing_ratio
            )),
            Method::SquintSplit if self.spacing_ratio <= 1.0 => bad(format!(
                "squint-split sensing needs spacing_ratio > 1, got {}",
                self.spacing_ratio
            )),
            Method::SquintSplit => {
                let d = design_frontend(&config, t0, tc)
                    .map_err(|e| ExperimentError::Config(e.to_string()))?;
                if !split_sensing_ranges(&d).overlap_free {
                    return bad(format!(
                        "sensing range ({t0}, {tc}) gives overlapping split ranges"
                    ));
                }
                Ok(())
            }
            Method::SquintOnly => {
                design_frontend(&config, t0, tc)
                    .map_err(|e| ExperimentError::Config(e.to_string()))?;
                Ok(())
            }
            Method::Exhaustive => Ok(()),
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseStat {
    pub method: Method,
    #[serde(rename = "M")]
    pub antennas: usize,
    #[serde(rename = "N")]
    pub subcarriers: usize,
    #[serde(rename = "P")]
    pub spacing_ratio: f64,
    pub snr_db: f64,
    pub aod_lo: f64,
    pub aod_hi: f64,
    pub range_lo: f64,
    pub range_hi: f64,
    pub trials: usize,
    /// NaN when no user received an estimate.
    pub rmse_deg: f64,
    pub coverage_rate: f64,
    pub blocks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSession {
    pub estimate_deg: f64,
    pub covered: bool,
    pub blocks_used: usize,
}

/// Exhaustive narrowband baseline: `q` phase-shifter beams uniformly spaced in
/// sine across `span_deg`, one block each; the strongest codeword wins.
pub fn run_exhaustive_session(
    config: &SystemConfig,
    span_deg: (f64, f64),
    q: usize,
    user: &UserTruth,
    noise: &NoiseModel,
) -> Result<SweepSession, SenseError> {
    if q == 0 {
        return Err(SenseError::Precondition(
            "codebook must hold at least one direction".into(),
        ));
    }
    let (a, b) = (sin_deg(span_deg.0), sin_deg(span_deg.1));
    let grid = SubcarrierGrid::new(config.bandwidth_hz, 1);
    let blocks = BlockCounter::new();
    let mut rng = noise.rng();
    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut covered = false;
    for i in 0..q {
        let s = if q == 1 {
            0.5 * (a + b)
        } else {
            a + (b - a) * i as f64 / (q - 1) as f64
        };
        let angle = asin_deg(s)?;
        let design = FrontendDesign::from_slope(*config, angle, 0.0)?;
        let report = blocks.sound_with_rng(&design, user, &grid, noise.variance, &mut rng);
        covered |= report.covered;
        if report.peak_power > best.0 {
            best = (report.peak_power, angle);
        }
    }
    Ok(SweepSession {
        estimate_deg: best.1,
        covered,
        blocks_used: blocks.get(),
    })
}

struct Point<'a> {
    sc: &'a ScenarioConfig,
    config: SystemConfig,
    design: Option<FrontendDesign>,
    grid: SubcarrierGrid,
    variance: f64,
}

impl Point<'_> {
    fn midpoint(&self) -> Option<f64> {
        match self.sc.uncovered {
            UncoveredPolicy::Exclude => None,
            UncoveredPolicy::Midpoint => {
                Some(0.5 * (self.sc.sensing_range_deg.0 + self.sc.sensing_range_deg.1))
            }
        }
    }

    fn sense(&self, user: &UserTruth, noise: NoiseModel) -> Result<TrialResult, ExperimentError> {
        let truth_deg = user.aod_deg;
        let result = |estimate: Option<f64>, covered: bool, blocks_used: usize| TrialResult {
            truth_deg,
            estimate_deg: if covered { estimate } else { self.midpoint() },
            covered,
            blocks_used,
        };
        match self.sc.method {
            Method::SquintOnly => {
                let design = self.design.as_ref().expect("squint design");
                match run_squint_session(design, user, &self.grid, &noise) {
                    Ok(s) => Ok(result(Some(s.estimate_deg), true, s.blocks_used)),
                    Err(SenseError::NotInRange) => Ok(result(None, false, 1)),
                    Err(e) => Err(e.into()),
                }
            }
            Method::SquintSplit => {
                let (t0, tc) = self.sc.sensing_range_deg;
                match run_split_session(&self.config, t0, tc, user, &self.grid, &noise) {
                    Ok(s) => Ok(result(Some(s.estimate_deg), true, s.blocks_used)),
                    Err(f) => match (f.error, f.first, f.second) {
                        (SenseError::NotInRange, None, _) => Ok(result(None, false, f.blocks_used)),
                        // Second block lost the user or could not be planned:
                        // keep the first-pass main-beam reading.
                        (
                            SenseError::NotInRange | SenseError::ValidationUnavailable,
                            Some(first),
                            _,
                        ) => Ok(result(Some(first.candidates.main_deg), true, f.blocks_used)),
                        (
                            SenseError::NoIntersection { .. }
                            | SenseError::AmbiguousIntersection { .. },
                            Some(first),
                            Some(second),
                        ) => Ok(result(
                            Some(nearest_pair(&first.candidates, &second.candidates)),
                            true,
                            f.blocks_used,
                        )),
                        (e, _, _) => Err(e.into()),
                    },
                }
            }
            Method::Exhaustive => {
                let s = run_exhaustive_session(
                    &self.config,
                    self.sc.sensing_range_deg,
                    self.grid.len(),
                    user,
                    &noise,
                )?;
                Ok(result(Some(s.estimate_deg), s.covered, s.blocks_used))
            }
        }
    }
}

/// Draws the users of trial `trial`. Independent of SNR, `N` and `M`, so every
/// scenario point sees the same geometry.
pub fn draw_users(sc: &ScenarioConfig, trial: usize) -> Vec<UserTruth> {
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    rng.set_stream(trial as u64);
    let (lo, hi) = sc.aod_range_deg;
    (0..sc.users_per_trial)
        .map(|_| {
            let aod = rng.random_range(lo..=hi);
            let phase = rng.random::<f64>() * 2.0 * PI;
            UserTruth::new(aod, Complex64::from_polar(1.0, phase), 0.0)
                .expect("AoD inside (-90, 90)")
        })
        .collect()
}

pub fn run_scenario(sc: &ScenarioConfig) -> Result<Vec<RmseStat>, ExperimentError> {
    run_scenario_with_progress(sc, |_| {})
}

fn point_design(
    sc: &ScenarioConfig,
    config: &SystemConfig,
) -> Result<Option<FrontendDesign>, ExperimentError> {
    match sc.method {
        Method::Exhaustive => Ok(None),
        _ => design_frontend(config, sc.sensing_range_deg.0, sc.sensing_range_deg.1)
            .map(Some)
            .map_err(|e| ExperimentError::Config(e.to_string())),
    }
}

/// Per-user results of every trial at one `(M, N, SNR)` point, in trial order.
pub fn run_point(
    sc: &ScenarioConfig,
    antennas: usize,
    subcarriers: usize,
    snr_db: f64,
) -> Result<Vec<Vec<TrialResult>>, ExperimentError> {
    sc.validate()?;
    let config = sc.system(antennas, subcarriers)?;
    let design = point_design(sc, &config)?;
    trials_at(sc, config, design, subcarriers, snr_db)
}

fn trials_at(
    sc: &ScenarioConfig,
    config: SystemConfig,
    design: Option<FrontendDesign>,
    subcarriers: usize,
    snr_db: f64,
) -> Result<Vec<Vec<TrialResult>>, ExperimentError> {
    let point = Point {
        sc,
        config,
        design,
        grid: SubcarrierGrid::new(sc.bandwidth_hz, subcarriers),
        variance: snr_to_noise(&config, snr_db),
    };
    (0..sc.trials)
        .into_par_iter()
        .map(|t| {
            draw_users(sc, t)
                .iter()
                .enumerate()
                .map(|(k, user)| {
                    let stream = (t * sc.users_per_trial + k) as u64;
                    let noise =
                        NoiseModel::new(point.variance, sc.seed ^ NOISE_KEY).with_stream(stream);
                    point.sense(user, noise)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect()
}

/// Runs every `(M, N, SNR)` point in that loop order. `progress` sees each row
/// as soon as it is finished.
pub fn run_scenario_with_progress(
    sc: &ScenarioConfig,
    mut progress: impl FnMut(&RmseStat),
) -> Result<Vec<RmseStat>, ExperimentError> {
    sc.validate()?;
    let mut table = Vec::new();
    for &m in &sc.antennas {
        for &n in &sc.subcarriers {
            let config = sc.system(m, n)?;
            let design = point_design(sc, &config)?;
            for &snr in &sc.snr_db {
                let trials = trials_at(sc, config, design, n, snr)?;
                let total = trials.iter().map(Vec::len).sum::<usize>();
                let covered = trials.iter().flatten().filter(|r| r.covered).count();
                let rmse_deg = match rmse(&trials) {
                    Ok(v) => v,
                    Err(ExperimentError::Undefined) => f64::NAN,
                    Err(e) => return Err(e),
                };
                let stat = RmseStat {
                    method: sc.method,
                    antennas: m,
                    subcarriers: n,
                    spacing_ratio: sc.spacing_ratio,
                    snr_db: snr,
                    aod_lo: sc.aod_range_deg.0,
                    aod_hi: sc.aod_range_deg.1,
                    range_lo: sc.sensing_range_deg.0,
                    range_hi: sc.sensing_range_deg.1,
                    trials: sc.trials,
                    rmse_deg,
                    coverage_rate: covered as f64 / total as f64,
                    blocks: time_overhead(sc.method, n),
                };
                progress(&stat);
                table.push(stat);
            }
        }
    }
    Ok(table)
}

pub fn write_results<W: Write>(table: &[RmseStat], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in table {
        w.serialize(row)?;
    }
    w.flush().map_err(|source| ExperimentError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}

pub fn emit_results(table: &[RmseStat], path: &Path) -> Result<(), ExperimentError> {
    let io = |source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut buf = Vec::new();
    write_results(table, &mut buf)?;
    std::fs::write(path, buf).map_err(io)
}
