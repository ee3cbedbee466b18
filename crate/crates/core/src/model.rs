//! Frequency-domain wideband channel and array-gain primitives for a ULA
//! operating in the beam squint regime.
//!
//! Subcarrier frequencies are baseband offsets `f ∈ [0, F]` from the carrier.
//! All sine-domain maps are linear in `sin ϑ`, so angles are converted once at
//! the boundary and the rest of the math works on sines.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid system configuration: {0}")]
    InvalidConfig(String),
    #[error("angle {0}° outside the open interval (-90°, 90°)")]
    AngleOutOfRange(f64),
    #[error("frequency offset {freq_hz} Hz outside [0, {bandwidth_hz}] Hz")]
    FrequencyOutOfRange { freq_hz: f64, bandwidth_hz: f64 },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// Array geometry and OFDM numerology.
///
/// The inter-antenna spacing is stored as the ratio `P` with `d = P·λ_c/2`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SystemConfig {
    pub antenna_count: usize,
    pub spacing_ratio: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub subcarrier_count: usize,
    pub rf_chains: usize,
}

impl SystemConfig {
    pub fn new(
        antenna_count: usize,
        spacing_ratio: f64,
        carrier_hz: f64,
        bandwidth_hz: f64,
        subcarrier_count: usize,
        rf_chains: usize,
    ) -> Result<Self, ModelError> {
        let cfg = Self {
            antenna_count,
            spacing_ratio,
            carrier_hz,
            bandwidth_hz,
            subcarrier_count,
            rf_chains,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.antenna_count < 2 {
            return bad(format!("antenna count {} < 2", self.antenna_count));
        }
        if !(self.spacing_ratio.is_finite() && self.spacing_ratio > 0.0) {
            return bad(format!(
                "spacing ratio {} must be positive",
                self.spacing_ratio
            ));
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return bad(format!("carrier {} Hz must be positive", self.carrier_hz));
        }
        if !(self.bandwidth_hz > 0.0 && self.bandwidth_hz < self.carrier_hz) {
            return bad(format!(
                "bandwidth {} Hz must lie in (0, carrier)",
                self.bandwidth_hz
            ));
        }
        if self.subcarrier_count < 2 {
            return bad(format!("subcarrier count {} < 2", self.subcarrier_count));
        }
        if self.rf_chains < 1 {
            return bad("at least one RF chain is required".into());
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_ratio * self.wavelength_m() / 2.0
    }

    /// `d / λ_c`, equal to `P / 2`.
    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing_ratio / 2.0
    }

    /// `1 + f / f_c`, the factor by which the electrical aperture grows at `f`.
    pub fn squint_factor(&self, freq_hz: f64) -> f64 {
        1.0 + freq_hz / self.carrier_hz
    }

    pub fn with_antennas(mut self, antenna_count: usize) -> Self {
        self.antenna_count = antenna_count;
        self
    }

    pub fn with_subcarriers(mut self, subcarrier_count: usize) -> Self {
        self.subcarrier_count = subcarrier_count;
        self
    }

    pub(crate) fn check_freq(&self, freq_hz: f64) -> Result<(), ModelError> {
        if freq_hz.is_finite() && (0.0..=self.bandwidth_hz).contains(&freq_hz) {
            Ok(())
        } else {
            Err(ModelError::FrequencyOutOfRange {
                freq_hz,
                bandwidth_hz: self.bandwidth_hz,
            })
        }
    }
}

/// Ground truth for a single-antenna user with one LOS path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserTruth {
    pub aod_deg: f64,
    /// Equivalent baseband complex gain `β`.
    pub gain: Complex64,
    /// Propagation delay to the first antenna, seconds.
    pub delay_s: f64,
}

impl UserTruth {
    pub fn new(aod_deg: f64, gain: Complex64, delay_s: f64) -> Result<Self, ModelError> {
        check_angle(aod_deg)?;
        if gain.norm_sqr() == 0.0 || !gain.is_finite() {
            return Err(ModelError::InvalidConfig(
                "user gain must be nonzero".into(),
            ));
        }
        if !(delay_s.is_finite() && delay_s >= 0.0) {
            return Err(ModelError::InvalidConfig(format!(
                "user delay {delay_s} s must be nonnegative"
            )));
        }
        Ok(Self {
            aod_deg,
            gain,
            delay_s,
        })
    }

    /// Unit gain, zero delay.
    pub fn at(aod_deg: f64) -> Result<Self, ModelError> {
        Self::new(aod_deg, Complex64::new(1.0, 0.0), 0.0)
    }
}

/// Normalized AoD `ψ = (d/λ_c)·sin ϑ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedAoD {
    pub psi: f64,
}

impl NormalizedAoD {
    pub fn from_angle(config: &SystemConfig, aod_deg: f64) -> Self {
        Self {
            psi: config.spacing_wavelengths() * aod_deg.to_radians().sin(),
        }
    }

    /// `Θ(f) = ψ·(1 + f/f_c)`.
    pub fn effective(&self, config: &SystemConfig, freq_hz: f64) -> f64 {
        self.psi * config.squint_factor(freq_hz)
    }
}

/// `a(Θ(f))`: unit-modulus Vandermonde vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector(pub Vec<Complex64>);

impl SteeringVector {
    /// Entry `m` (zero-based) is `exp(-j2π·m·Θ)`.
    pub fn from_phase(antenna_count: usize, theta: f64) -> Self {
        Self(
            (0..antenna_count)
                .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 * theta))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(Complex64::norm_sqr).sum()
    }
}

pub(crate) fn check_angle(aod_deg: f64) -> Result<(), ModelError> {
    if aod_deg.is_finite() && aod_deg.abs() < 90.0 {
        Ok(())
    } else {
        Err(ModelError::AngleOutOfRange(aod_deg))
    }
}

pub fn steering_vector(
    config: &SystemConfig,
    aod_deg: f64,
    freq_hz: f64,
) -> Result<SteeringVector, ModelError> {
    check_angle(aod_deg)?;
    config.check_freq(freq_hz)?;
    let theta = NormalizedAoD::from_angle(config, aod_deg).effective(config, freq_hz);
    Ok(SteeringVector::from_phase(config.antenna_count, theta))
}

/// `h(f) = β·exp(-j2π f τ)·a(Θ(f))`.
pub fn channel_response(
    config: &SystemConfig,
    user: &UserTruth,
    freq_hz: f64,
) -> Result<Vec<Complex64>, ModelError> {
    let a = steering_vector(config, user.aod_deg, freq_hz)?;
    let common = user.gain * Complex64::from_polar(1.0, -2.0 * PI * freq_hz * user.delay_s);
    Ok(a.0.into_iter().map(|x| common * x).collect())
}

/// `hᵀ·s + ν` (plain transpose, no conjugation).
pub fn received_symbol(
    channel: &[Complex64],
    tx: &[Complex64],
    noise: Complex64,
) -> Result<Complex64, ModelError> {
    if channel.len() != tx.len() {
        return Err(ModelError::LengthMismatch {
            expected: channel.len(),
            actual: tx.len(),
        });
    }
    Ok(channel
        .iter()
        .zip(tx)
        .map(|(h, s)| h * s)
        .sum::<Complex64>()
        + noise)
}

/// `|a(Θ(f))ᵀ·w|`.
pub fn array_gain(
    config: &SystemConfig,
    aod_deg: f64,
    freq_hz: f64,
    weights: &[Complex64],
) -> Result<f64, ModelError> {
    if weights.len() != config.antenna_count {
        return Err(ModelError::LengthMismatch {
            expected: config.antenna_count,
            actual: weights.len(),
        });
    }
    let a = steering_vector(config, aod_deg, freq_hz)?;
    Ok(received_symbol(&a.0, weights, Complex64::new(0.0, 0.0))?.norm())
}

/// Closed form of `Σ_{m=0}^{M-1} exp(j2π·m·x)`.
///
/// Periodic in `x` with period 1; `|·| = M` at integers.
pub fn array_factor(antenna_count: usize, x: f64) -> Complex64 {
    let m = antenna_count as f64;
    let r = x - x.round();
    let den = (PI * r).sin();
    let magnitude = if den.abs() < 1e-300 {
        m
    } else {
        (PI * m * r).sin() / den
    };
    Complex64::from_polar(1.0, PI * (m - 1.0) * r) * magnitude
}

/// Normalized AoD with maximum PS-only gain at `f`: `ψ = φ / (1 + f/f_c)`.
pub fn squint_matched_aod(phi: f64, freq_hz: f64, config: &SystemConfig) -> NormalizedAoD {
    NormalizedAoD {
        psi: phi / config.squint_factor(freq_hz),
    }
}

/// Beam squint range `Δψ = φ·F / (f_c + F)`.
pub fn squint_range(phi: f64, config: &SystemConfig) -> f64 {
    phi * config.bandwidth_hz / (config.carrier_hz + config.bandwidth_hz)
}

/// PS-only weights `a(φ)*`, entry `m` equal to `exp(j2π·m·φ)`.
pub fn phase_shifter_weights(antenna_count: usize, phi: f64) -> Vec<Complex64> {
    (0..antenna_count)
        .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 * phi))
        .collect()
}
