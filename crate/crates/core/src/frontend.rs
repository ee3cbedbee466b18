//! Phase-shifter + true-time-delay frontend for one RF chain.
//!
//! A design maps a PS phase `φ` and a per-antenna TTD increment onto a beam
//! that sweeps monotonically from `ϑ_0` at `f = 0` to `ϑ_c` at `f = F`.
//! Every branch of the beam (main and grating aliases) obeys
//!
//! ```text
//! sin ϑ_Z(f) = (sin ϑ_0 − 2Z/P − f·(2/P)·slope) / (1 + f/f_c)
//! ```
//!
//! with `Z = 0` the main beam.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::{check_angle, ModelError, SystemConfig};

/// Inputs this far outside `[-1, 1]` are clamped before `asin`.
const ASIN_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DesignError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("degenerate sweep: sin ϑ_0 = sin ϑ_c = {0}")]
    DegenerateRange(f64),
    #[error("sine {0} outside [-1, 1]")]
    SineOutOfRange(f64),
    #[error("subcarrier grid must be strictly increasing inside [0, F]")]
    BadGrid,
}

/// `asin` in degrees, clamping tiny floating-point excursions.
pub fn asin_deg(sine: f64) -> Result<f64, DesignError> {
    if !sine.is_finite() || sine.abs() > 1.0 + ASIN_CLAMP {
        return Err(DesignError::SineOutOfRange(sine));
    }
    Ok(sine.clamp(-1.0, 1.0).asin().to_degrees())
}

pub fn sin_deg(deg: f64) -> f64 {
    deg.to_radians().sin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontendDesign {
    config: SystemConfig,
    phi: f64,
    ttd_slope: f64,
    theta0_deg: f64,
    thetac_deg: f64,
}

impl FrontendDesign {
    /// Keeps a fixed TTD slope and re-points the PS network at `theta0_deg`.
    /// The termination angle follows from the slope.
    pub fn from_slope(
        config: SystemConfig,
        theta0_deg: f64,
        ttd_slope: f64,
    ) -> Result<Self, DesignError> {
        config.validate()?;
        check_angle(theta0_deg)?;
        let mut design = Self {
            config,
            phi: config.spacing_wavelengths() * sin_deg(theta0_deg),
            ttd_slope,
            theta0_deg,
            thetac_deg: theta0_deg,
        };
        let end = design.branch_sine(0, config.bandwidth_hz);
        design.thetac_deg = asin_deg(end)?;
        if design.thetac_deg.abs() >= 90.0 {
            return Err(DesignError::SineOutOfRange(end));
        }
        Ok(design)
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    /// PS parameter `φ = (P/2)·sin ϑ_0`.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// TTD delay increment per antenna, seconds; `t_m = m·slope` for zero-based `m`.
    pub fn ttd_slope(&self) -> f64 {
        self.ttd_slope
    }

    pub fn theta0_deg(&self) -> f64 {
        self.theta0_deg
    }

    pub fn thetac_deg(&self) -> f64 {
        self.thetac_deg
    }

    /// Signed TTD delays `t_m = m·slope`.
    pub fn delays(&self) -> Vec<f64> {
        (0..self.config.antenna_count)
            .map(|m| m as f64 * self.ttd_slope)
            .collect()
    }

    /// Delays shifted by a common offset so that none is negative.
    ///
    /// A common delay multiplies the whole response by one phase, so gains
    /// and beam directions are unchanged.
    pub fn physical_delays(&self) -> Vec<f64> {
        let last = (self.config.antenna_count - 1) as f64 * self.ttd_slope;
        let offset = (-last).max(0.0);
        self.delays().into_iter().map(|t| t + offset).collect()
    }

    /// Unclamped sine of branch `z` at frequency `freq_hz`.
    pub fn branch_sine(&self, z: i64, freq_hz: f64) -> f64 {
        let scale = 2.0 / self.config.spacing_ratio;
        (sin_deg(self.theta0_deg) - scale * z as f64 - freq_hz * scale * self.ttd_slope)
            / self.config.squint_factor(freq_hz)
    }

    /// Per-antenna phase of `a(Θ(f))ᵀ·g(f)` for a user at sine `u`; the
    /// gain peaks where this is an integer.
    pub fn phase_mismatch(&self, sine: f64, freq_hz: f64) -> f64 {
        self.phi
            - freq_hz * self.ttd_slope
            - self.config.spacing_wavelengths() * sine * self.config.squint_factor(freq_hz)
    }
}

/// `g_m(f) = exp(j2π·m·φ)·exp(-j2π·f·t_m)`.
pub fn frontend_response(
    design: &FrontendDesign,
    freq_hz: f64,
) -> Result<Vec<Complex64>, DesignError> {
    design.config.check_freq(freq_hz)?;
    let step = design.phi - freq_hz * design.ttd_slope;
    Ok((0..design.config.antenna_count)
        .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 * step))
        .collect())
}

/// Designs the PS phase and TTD slope for a sweep `ϑ_0 → ϑ_c` over `[0, F]`.
pub fn design_frontend(
    config: &SystemConfig,
    theta0_deg: f64,
    thetac_deg: f64,
) -> Result<FrontendDesign, DesignError> {
    config.validate()?;
    check_angle(theta0_deg)?;
    check_angle(thetac_deg)?;
    let s0 = sin_deg(theta0_deg);
    let sc = sin_deg(thetac_deg);
    if s0 == sc {
        return Err(DesignError::DegenerateRange(s0));
    }
    let ttd_slope = config.spacing_wavelengths()
        * (s0 - sc * config.squint_factor(config.bandwidth_hz))
        / config.bandwidth_hz;
    Ok(FrontendDesign {
        config: *config,
        phi: config.spacing_wavelengths() * s0,
        ttd_slope,
        theta0_deg,
        thetac_deg,
    })
}

/// Main-beam direction at `freq_hz`, degrees.
pub fn beam_direction(design: &FrontendDesign, freq_hz: f64) -> Result<f64, DesignError> {
    design.config.check_freq(freq_hz)?;
    asin_deg(design.branch_sine(0, freq_hz))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitAlias {
    pub z: i64,
    pub angle_deg: f64,
}

/// Grating-lobe aliases of a beam direction at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitAliasSet {
    pub base_deg: f64,
    /// Sorted by ascending angle.
    pub aliases: Vec<SplitAlias>,
}

impl SplitAliasSet {
    pub fn is_empty(&self) -> bool {
        self.aliases.is_empty()
    }

    pub fn angles_deg(&self) -> Vec<f64> {
        self.aliases.iter().map(|a| a.angle_deg).collect()
    }

    pub fn z_values(&self) -> Vec<i64> {
        self.aliases.iter().map(|a| a.z).collect()
    }
}

/// Largest `|Z|` that can ever produce a visible alias for this configuration.
pub fn alias_order_bound(config: &SystemConfig) -> i64 {
    (config.spacing_ratio * config.squint_factor(config.bandwidth_hz)).ceil() as i64
}

/// All angles sharing the steering phase of `aod_deg` at `freq_hz`:
/// `sin ϑ^s = sin ϑ − 2Z / (P·(1 + f/f_c))` for nonzero `Z`.
pub fn split_angles(
    config: &SystemConfig,
    aod_deg: f64,
    freq_hz: f64,
) -> Result<SplitAliasSet, DesignError> {
    check_angle(aod_deg)?;
    let base = sin_deg(aod_deg);
    let period = 2.0 / (config.spacing_ratio * config.squint_factor(freq_hz));
    let bound = alias_order_bound(config);
    let mut aliases: Vec<SplitAlias> = (-bound..=bound)
        .filter(|&z| z != 0)
        .filter_map(|z| {
            let s = base - z as f64 * period;
            (s.abs() <= 1.0).then(|| SplitAlias {
                z,
                angle_deg: s.asin().to_degrees(),
            })
        })
        .collect();
    aliases.sort_by(|a, b| a.angle_deg.total_cmp(&b.angle_deg));
    Ok(SplitAliasSet {
        base_deg: aod_deg,
        aliases,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub freq_hz: f64,
    pub main_deg: f64,
    pub aliases: SplitAliasSet,
}

/// Main direction and its aliases at every grid frequency.
pub fn beam_trajectory(
    design: &FrontendDesign,
    grid: &[f64],
) -> Result<Vec<TrajectoryPoint>, DesignError> {
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DesignError::BadGrid);
    }
    grid.iter()
        .map(|&f| {
            let main_deg = beam_direction(design, f)?;
            let aliases = split_angles(&design.config, main_deg, f)?;
            Ok(TrajectoryPoint {
                freq_hz: f,
                main_deg,
                aliases,
            })
        })
        .collect()
}
