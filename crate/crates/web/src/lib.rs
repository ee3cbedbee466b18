//! wasm-bindgen wrappers around `rainbeam` for the demo page in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string. The `*_json`
//! functions do the actual work and are callable from native code and tests.

use rainbeam::experiments::{run_exhaustive_session, snr_to_noise, Method};
use rainbeam::frontend::{beam_trajectory, design_frontend, frontend_response, FrontendDesign};
use rainbeam::model::{array_gain, SystemConfig, UserTruth};
use rainbeam::scenario::SUGGEST_ROBUST_SHIFT_DEG;
use rainbeam::sensing::{
    nearest_pair, run_split_session, run_squint_session, split_sensing_ranges, suggest_split_range,
    NoiseModel, PassRecord, SubcarrierGrid,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Array geometry shared by every call.
#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    pub antennas: usize,
    pub spacing_ratio: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub subcarriers: usize,
}

impl Geometry {
    fn system(&self) -> Result<SystemConfig, String> {
        SystemConfig::new(
            self.antennas,
            self.spacing_ratio,
            self.carrier_hz,
            self.bandwidth_hz,
            self.subcarriers,
            1,
        )
        .map_err(|e| e.to_string())
    }

    fn design(&self, theta0: f64, thetac: f64) -> Result<FrontendDesign, String> {
        design_frontend(&self.system()?, theta0, thetac).map_err(|e| e.to_string())
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Pattern {
    freqs_hz: Vec<f64>,
    angles_deg: Vec<f64>,
    /// Row per frequency, gain normalized to M.
    gain: Vec<Vec<f64>>,
}

/// Normalized gain on `rows` evenly spaced frequencies × `cols` angles.
pub fn beam_pattern_json(
    g: Geometry,
    theta0: f64,
    thetac: f64,
    rows: usize,
    cols: usize,
) -> Result<String, String> {
    if rows < 2 || cols < 2 || rows * cols > 2_000_000 {
        return Err("pattern needs 2..=2e6 cells with at least 2 rows and columns".into());
    }
    let d = g.design(theta0, thetac)?;
    let config = g.system()?;
    let freqs_hz: Vec<f64> = (0..rows)
        .map(|k| g.bandwidth_hz * k as f64 / (rows - 1) as f64)
        .collect();
    let angles_deg: Vec<f64> = (0..cols)
        .map(|k| -90.0 + 180.0 * (k as f64 + 0.5) / cols as f64)
        .collect();
    let m = g.antennas as f64;
    let gain = freqs_hz
        .iter()
        .map(|&f| {
            let w = frontend_response(&d, f).map_err(|e| e.to_string())?;
            angles_deg
                .iter()
                .map(|&a| {
                    array_gain(&config, a, f, &w)
                        .map(|v| v / m)
                        .map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect::<Result<_, String>>()?;
    to_json(&Pattern {
        freqs_hz,
        angles_deg,
        gain,
    })
}

#[derive(Serialize)]
struct Lane {
    z: i64,
    start_deg: f64,
    end_deg: f64,
}

#[derive(Serialize)]
struct Trajectory {
    freqs_hz: Vec<f64>,
    main_deg: Vec<f64>,
    /// `[freq_hz, angle_deg, z]` triples.
    aliases: Vec<(f64, f64, i64)>,
    lanes: Vec<Lane>,
    overlap_free: bool,
}

/// Main beam and alias directions on the subcarrier grid, plus swept ranges.
pub fn trajectory_json(g: Geometry, theta0: f64, thetac: f64) -> Result<String, String> {
    let d = g.design(theta0, thetac)?;
    let grid: Vec<f64> = SubcarrierGrid::new(g.bandwidth_hz, g.subcarriers)
        .frequencies()
        .collect();
    let points = beam_trajectory(&d, &grid).map_err(|e| e.to_string())?;
    let ranges = split_sensing_ranges(&d);
    let mut aliases = Vec::new();
    for p in &points {
        for a in &p.aliases.aliases {
            aliases.push((p.freq_hz, a.angle_deg, a.z));
        }
    }
    to_json(&Trajectory {
        freqs_hz: points.iter().map(|p| p.freq_hz).collect(),
        main_deg: points.iter().map(|p| p.main_deg).collect(),
        aliases,
        lanes: ranges
            .branches()
            .map(|b| Lane {
                z: b.z,
                start_deg: b.start_deg,
                end_deg: b.end_deg,
            })
            .collect(),
        overlap_free: ranges.overlap_free,
    })
}

#[derive(Serialize)]
struct Pass {
    theta0_deg: f64,
    thetac_deg: f64,
    subcarrier: usize,
    candidates_deg: Vec<f64>,
}

impl From<&PassRecord> for Pass {
    fn from(p: &PassRecord) -> Self {
        Pass {
            theta0_deg: p.design.theta0_deg(),
            thetac_deg: p.design.thetac_deg(),
            subcarrier: p.report.subcarrier_index,
            candidates_deg: p.candidates.all().collect(),
        }
    }
}

#[derive(Serialize, Default)]
struct SenseOutcome {
    method: String,
    truth_deg: f64,
    range_deg: (f64, f64),
    estimate_deg: Option<f64>,
    blocks: usize,
    passes: Vec<Pass>,
    error: Option<String>,
}

/// One sensing session. `range` of `None` picks a default design: the
/// suggested split design for squint-split, (−80°, 80°) otherwise.
pub fn sense_json(
    g: Geometry,
    method: &str,
    user_deg: f64,
    snr_db: f64,
    seed: u64,
    range: Option<(f64, f64)>,
) -> Result<String, String> {
    let method: Method = method.parse()?;
    let config = g.system()?;
    let user = UserTruth::at(user_deg).map_err(|e| e.to_string())?;
    if snr_db.is_nan() {
        return Err("SNR must be a number".into());
    }
    let noise = NoiseModel::new(snr_to_noise(&config, snr_db), seed);
    let grid = SubcarrierGrid::from_config(&config);
    let range = match (range, method) {
        (Some(r), _) => r,
        (None, Method::SquintSplit) => {
            suggest_split_range(&config, (-80.0, 80.0), SUGGEST_ROBUST_SHIFT_DEG)
                .map_err(|e| e.to_string())?
        }
        (None, _) => (-80.0, 80.0),
    };
    let mut out = SenseOutcome {
        method: method.to_string(),
        truth_deg: user_deg,
        range_deg: range,
        ..Default::default()
    };
    match method {
        Method::SquintOnly => {
            let d = g.design(range.0, range.1)?;
            match run_squint_session(&d, &user, &grid, &noise) {
                Ok(s) => {
                    out.estimate_deg = Some(s.estimate_deg);
                    out.blocks = s.blocks_used;
                    out.passes.push(Pass {
                        theta0_deg: range.0,
                        thetac_deg: range.1,
                        subcarrier: s.report.subcarrier_index,
                        candidates_deg: vec![s.estimate_deg],
                    });
                }
                Err(e) => {
                    out.blocks = 1;
                    out.error = Some(e.to_string());
                }
            }
        }
        Method::SquintSplit => {
            match run_split_session(&config, range.0, range.1, &user, &grid, &noise) {
                Ok(s) => {
                    out.estimate_deg = Some(s.estimate_deg);
                    out.blocks = s.blocks_used;
                    out.passes = vec![(&s.first).into(), (&s.second).into()];
                }
                Err(f) => {
                    out.blocks = f.blocks_used;
                    out.error = Some(f.error.to_string());
                    if let (Some(a), Some(b)) = (&f.first, &f.second) {
                        out.estimate_deg = Some(nearest_pair(&a.candidates, &b.candidates));
                    }
                    out.passes = f
                        .first
                        .iter()
                        .chain(f.second.iter())
                        .map(Pass::from)
                        .collect();
                }
            }
        }
        Method::Exhaustive => {
            let s = run_exhaustive_session(&config, range, g.subcarriers, &user, &noise)
                .map_err(|e| e.to_string())?;
            out.blocks = s.blocks_used;
            if s.covered {
                out.estimate_deg = Some(s.estimate_deg);
            } else {
                out.error = Some("user not located in any sensed range".into());
            }
        }
    }
    to_json(&out)
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = beamPattern)]
pub fn beam_pattern(
    m: usize,
    p: f64,
    fc: f64,
    bw: f64,
    theta0: f64,
    thetac: f64,
    rows: usize,
    cols: usize,
) -> Result<String, JsError> {
    let g = Geometry {
        antennas: m,
        spacing_ratio: p,
        carrier_hz: fc,
        bandwidth_hz: bw,
        subcarriers: rows,
    };
    js(beam_pattern_json(g, theta0, thetac, rows, cols))
}

#[wasm_bindgen]
pub fn trajectory(
    m: usize,
    p: f64,
    fc: f64,
    bw: f64,
    n: usize,
    theta0: f64,
    thetac: f64,
) -> Result<String, JsError> {
    let g = Geometry {
        antennas: m,
        spacing_ratio: p,
        carrier_hz: fc,
        bandwidth_hz: bw,
        subcarriers: n,
    };
    js(trajectory_json(g, theta0, thetac))
}

/// `theta0`/`thetac` of NaN mean "pick a default design".
#[allow(clippy::too_many_arguments)]
#[wasm_bindgen]
pub fn sense(
    method: &str,
    m: usize,
    p: f64,
    fc: f64,
    bw: f64,
    n: usize,
    theta0: f64,
    thetac: f64,
    user_deg: f64,
    snr_db: f64,
    seed: u32,
) -> Result<String, JsError> {
    let g = Geometry {
        antennas: m,
        spacing_ratio: p,
        carrier_hz: fc,
        bandwidth_hz: bw,
        subcarriers: n,
    };
    let range = (!theta0.is_nan() && !thetac.is_nan()).then_some((theta0, thetac));
    js(sense_json(g, method, user_deg, snr_db, seed as u64, range))
}
