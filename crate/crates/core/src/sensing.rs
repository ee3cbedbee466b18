//! Frequency-domain user-direction sensing.
//!
//! One OFDM block carries a beam that sweeps across the sensing range with
//! subcarrier frequency. The user reports the subcarrier with the strongest
//! received power and the base station inverts the sweep to get an angle.
//! With `P > 1` every report is ambiguous among the grating branches; a second
//! block with a shifted initial angle and the same TTD lines resolves it by
//! intersecting the two candidate sets.

use std::cell::Cell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::frontend::{
    alias_order_bound, asin_deg, beam_direction, design_frontend, sin_deg, split_angles,
    DesignError, FrontendDesign,
};
use crate::model::{array_factor, check_angle, ModelError, SystemConfig, UserTruth};

/// A user counts as covered when its best noiseless subcarrier power is within
/// this fraction of the `M²·|β|²` peak (half power).
pub const COVERAGE_FRACTION: f64 = 0.5;

/// Initial-angle shifts tried for the validation pass, degrees, in order.
pub const VALIDATION_SHIFTS_DEG: [f64; 28] = [
    0.1, -0.1, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0, 6.0, -6.0, 8.0, -8.0, 10.0,
    -10.0, 12.0, -12.0, 14.0, -14.0, 16.0, -16.0, 18.0, -18.0, 20.0, -20.0,
];

const AMBIGUITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SenseError {
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error("user not located in any sensed range")]
    NotInRange,
    #[error("no candidate pair agrees within tolerance {tolerance}")]
    NoIntersection { tolerance: f64 },
    #[error("{pairs} disjoint candidate pairs agree within tolerance {tolerance}")]
    AmbiguousIntersection { pairs: usize, tolerance: f64 },
    #[error("no validation angle satisfies the coverage and ambiguity constraints")]
    ValidationUnavailable,
    #[error("sensing ranges overlap; choose another (ϑ_0, ϑ_c)")]
    OverlappingRanges,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl From<ModelError> for SenseError {
    fn from(e: ModelError) -> Self {
        SenseError::Design(e.into())
    }
}

/// Uniform subcarrier grid `f_n = n·F/N`, `n = 0..N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubcarrierGrid {
    bandwidth_hz: f64,
    count: usize,
}

impl SubcarrierGrid {
    pub fn new(bandwidth_hz: f64, count: usize) -> Self {
        assert!(count >= 1 && bandwidth_hz > 0.0);
        Self {
            bandwidth_hz,
            count,
        }
    }

    pub fn from_config(config: &SystemConfig) -> Self {
        Self::new(config.bandwidth_hz, config.subcarrier_count)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn spacing_hz(&self) -> f64 {
        self.bandwidth_hz / self.count as f64
    }

    pub fn freq(&self, index: usize) -> f64 {
        index as f64 * self.bandwidth_hz / self.count as f64
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|n| self.freq(n))
    }
}

/// What a user sends back after one sensing block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackReport {
    pub subcarrier_index: usize,
    pub freq_hz: f64,
    pub peak_power: f64,
    /// `false` means the user saw no beam and sends nothing useful.
    pub covered: bool,
}

/// Complex AWGN with total variance `σ²`, reproducible from `(seed, stream)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub variance: f64,
    pub rng_seed: u64,
    pub stream: u64,
}

impl NoiseModel {
    pub fn new(variance: f64, rng_seed: u64) -> Self {
        assert!(variance >= 0.0, "noise variance must be nonnegative");
        Self {
            variance,
            rng_seed,
            stream: 0,
        }
    }

    pub fn noiseless() -> Self {
        Self::new(0.0, 0)
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// Independent stream for the `pass`-th block of a session.
    pub fn for_pass(self, pass: u64) -> Self {
        self.with_stream(self.stream.wrapping_mul(4).wrapping_add(pass))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Simulates one OFDM sensing block and the user's feedback.
///
/// Received sample on subcarrier `n` is `β·exp(-j2π f_n τ)·a(Θ(f_n))ᵀ·g(f_n) + ν_n`.
/// The inner product is a geometric series and is evaluated in closed form.
pub fn simulate_feedback(
    design: &FrontendDesign,
    user: &UserTruth,
    grid: &SubcarrierGrid,
    noise: &NoiseModel,
) -> FeedbackReport {
    let mut rng = noise.rng();
    feedback_with_rng(design, user, grid, noise.variance, &mut rng)
}

pub(crate) fn feedback_with_rng<R: Rng>(
    design: &FrontendDesign,
    user: &UserTruth,
    grid: &SubcarrierGrid,
    variance: f64,
    rng: &mut R,
) -> FeedbackReport {
    let m = design.config().antenna_count;
    let sine = sin_deg(user.aod_deg);
    let sigma = (variance / 2.0).sqrt();
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut best_clean = 0.0f64;
    for n in 0..grid.len() {
        let f = grid.freq(n);
        let af = array_factor(m, design.phase_mismatch(sine, f));
        let clean = user.gain * Complex64::from_polar(1.0, -2.0 * PI * f * user.delay_s) * af;
        best_clean = best_clean.max(clean.norm_sqr());
        let r = if variance > 0.0 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            clean + Complex64::new(re, im) * sigma
        } else {
            clean
        };
        let power = r.norm_sqr();
        if power > best.1 {
            best = (n, power);
        }
    }
    let full = (m * m) as f64 * user.gain.norm_sqr();
    FeedbackReport {
        subcarrier_index: best.0,
        freq_hz: grid.freq(best.0),
        peak_power: best.1,
        covered: best_clean >= COVERAGE_FRACTION * full,
    }
}

fn require_unit_spacing(design: &FrontendDesign) -> Result<(), SenseError> {
    let p = design.config().spacing_ratio;
    if (p - 1.0).abs() > 1e-12 {
        return Err(SenseError::Precondition(format!(
            "squint-only sensing needs half-wavelength spacing (P = 1), got P = {p}"
        )));
    }
    Ok(())
}

/// Squint-only estimate: the main-beam direction at the reported subcarrier.
pub fn sense_squint(design: &FrontendDesign, report: &FeedbackReport) -> Result<f64, SenseError> {
    require_unit_spacing(design)?;
    if !report.covered {
        return Err(SenseError::NotInRange);
    }
    Ok(beam_direction(design, report.freq_hz)?)
}

/// Sine-domain interval swept by one beam branch over `[0, F]`, clipped to the
/// visible region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRange {
    pub z: i64,
    /// Angle at `f = 0` (or the visible edge the branch enters from).
    pub start_deg: f64,
    /// Angle at `f = F` (or the visible edge the branch leaves through).
    pub end_deg: f64,
    pub sin_lo: f64,
    pub sin_hi: f64,
}

impl BranchRange {
    pub fn contains_sine(&self, sine: f64) -> bool {
        (self.sin_lo..=self.sin_hi).contains(&sine)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingRangeSet {
    pub main: BranchRange,
    /// Visible alias branches, ascending in sine.
    pub splits: Vec<BranchRange>,
    pub overlap_free: bool,
}

impl SensingRangeSet {
    pub fn branches(&self) -> impl Iterator<Item = &BranchRange> {
        std::iter::once(&self.main).chain(&self.splits)
    }

    pub fn covers_sine(&self, sine: f64) -> bool {
        self.branches().any(|b| b.contains_sine(sine))
    }

    /// Fraction of the angle interval `[lo, hi]` (degrees) lying in some branch.
    pub fn angular_coverage(&self, lo_deg: f64, hi_deg: f64) -> f64 {
        let mut spans: Vec<(f64, f64)> = self
            .branches()
            .map(|b| {
                let a = b.sin_lo.asin().to_degrees().max(lo_deg);
                let c = b.sin_hi.asin().to_degrees().min(hi_deg);
                (a, c)
            })
            .filter(|(a, c)| c > a)
            .collect();
        spans.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut total = 0.0;
        let mut cursor = f64::NEG_INFINITY;
        for (a, c) in spans {
            let a = a.max(cursor);
            if c > a {
                total += c - a;
                cursor = c;
            }
        }
        total / (hi_deg - lo_deg)
    }
}

fn branch_range(design: &FrontendDesign, z: i64) -> Option<BranchRange> {
    let bw = design.config().bandwidth_hz;
    // Each branch is monotone in f, so its endpoints bound the sweep.
    let s0 = design.branch_sine(z, 0.0);
    let s1 = design.branch_sine(z, bw);
    let lo = s0.min(s1).max(-1.0);
    let hi = s0.max(s1).min(1.0);
    if lo > hi {
        return None;
    }
    let clip = |s: f64| s.clamp(-1.0, 1.0).asin().to_degrees();
    Some(BranchRange {
        z,
        start_deg: clip(s0),
        end_deg: clip(s1),
        sin_lo: lo,
        sin_hi: hi,
    })
}

/// Main and alias sweep ranges of a design, with a pairwise-disjointness flag.
pub fn split_sensing_ranges(design: &FrontendDesign) -> SensingRangeSet {
    let main = branch_range(design, 0).expect("main branch spans the design endpoints");
    let bound = alias_order_bound(design.config()) + 1;
    let mut splits: Vec<BranchRange> = (-bound..=bound)
        .filter(|&z| z != 0)
        .filter_map(|z| branch_range(design, z))
        .collect();
    splits.sort_by(|a, b| a.sin_lo.total_cmp(&b.sin_lo));
    let mut all: Vec<&BranchRange> = std::iter::once(&main).chain(&splits).collect();
    all.sort_by(|a, b| a.sin_lo.total_cmp(&b.sin_lo));
    let overlap_free = all.windows(2).all(|w| w[0].sin_hi < w[1].sin_lo);
    SensingRangeSet {
        main,
        splits,
        overlap_free,
    }
}

/// Directions consistent with one feedback report.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub main_deg: f64,
    pub aliases_deg: Vec<f64>,
}

impl CandidateSet {
    pub fn all(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.main_deg).chain(self.aliases_deg.iter().copied())
    }

    pub fn len(&self) -> usize {
        1 + self.aliases_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

pub fn candidate_angles(
    design: &FrontendDesign,
    report: &FeedbackReport,
) -> Result<CandidateSet, SenseError> {
    if !report.covered {
        return Err(SenseError::NotInRange);
    }
    let main_deg = beam_direction(design, report.freq_hz)?;
    let aliases_deg = split_angles(design.config(), main_deg, report.freq_hz)?.angles_deg();
    Ok(CandidateSet {
        main_deg,
        aliases_deg,
    })
}

/// Whether re-sensing from `theta0_tilde_deg` (same TTD lines) would reproduce
/// the alias of branch `z` exactly, so that intersection cannot remove it.
///
/// Returns `None` when branch `z` has no visible alias at `f = 0` for either
/// initial angle.
pub fn ambiguity_condition(
    design: &FrontendDesign,
    theta0_deg: f64,
    theta0_tilde_deg: f64,
    z: i64,
) -> Result<Option<bool>, SenseError> {
    check_angle(theta0_deg)?;
    check_angle(theta0_tilde_deg)?;
    let cfg = design.config();
    let s0 = sin_deg(theta0_deg);
    let t0 = sin_deg(theta0_tilde_deg);
    let period = 2.0 / cfg.spacing_ratio;
    let s0_alias = s0 - z as f64 * period;
    let t0_alias = t0 - z as f64 * period;
    if z == 0 || s0_alias.abs() > 1.0 || t0_alias.abs() > 1.0 {
        return Ok(None);
    }
    let k = cfg.carrier_hz * period * design.ttd_slope();
    // (t0 + k)/(s0 + k) == (t0 - t0_alias)/(s0 - s0_alias), cross-multiplied.
    let lhs = (t0 + k) * (s0 - s0_alias);
    let rhs = (t0 - t0_alias) * (s0 + k);
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    Ok(Some((lhs - rhs).abs() <= AMBIGUITY_TOL * scale))
}

/// Picks the validation design: same TTD slope, initial angle shifted in the
/// sine domain by `sin δ` for the first `δ` in [`VALIDATION_SHIFTS_DEG`] that
/// keeps every angle of `must_cover` inside a swept range, stays overlap-free
/// and is unambiguous for every feasible alias order.
pub fn select_validation_angle(
    design: &FrontendDesign,
    must_cover_deg: &[f64],
) -> Result<FrontendDesign, SenseError> {
    pick_validation(design, must_cover_deg, None)
}

/// Like [`select_validation_angle`], but also rejects shifts under which a
/// wrong first-pass candidate would land within twice the intersection
/// tolerance of a predicted second-pass candidate. The exact ambiguity test
/// only catches coincidences; on a finite grid near misses matter too.
pub fn select_validation_angle_for_grid(
    design: &FrontendDesign,
    must_cover_deg: &[f64],
    grid: &SubcarrierGrid,
) -> Result<FrontendDesign, SenseError> {
    pick_validation(design, must_cover_deg, Some(grid))
}

/// Smallest sine distance between a first-pass candidate and a predicted
/// second-pass candidate that would form a wrong pair, over every hypothesis
/// in `candidates`.
fn wrong_pair_separation(validation: &FrontendDesign, candidates: &[f64]) -> f64 {
    let cfg = validation.config();
    let p = cfg.spacing_ratio;
    let t0 = sin_deg(validation.theta0_deg());
    let slope = validation.ttd_slope();
    let ranges = split_sensing_ranges(validation);
    let mut worst = f64::INFINITY;
    for (h, &sh) in candidates.iter().enumerate() {
        let Some(b) = ranges.branches().find(|b| b.contains_sine(sh)) else {
            continue;
        };
        // Solve branch_sine(z, f) = sh for f.
        let den = sh / cfg.carrier_hz + 2.0 * slope / p;
        let f = if den == 0.0 {
            0.0
        } else {
            ((t0 - 2.0 * b.z as f64 / p - sh) / den).clamp(0.0, cfg.bandwidth_hz)
        };
        let period = 2.0 / (p * cfg.squint_factor(f));
        let bound = alias_order_bound(cfg);
        for k in -bound - 1..=bound + 1 {
            let predicted = sh - k as f64 * period;
            if predicted.abs() > 1.0 {
                continue;
            }
            for (c, &sc) in candidates.iter().enumerate() {
                if c != h {
                    worst = worst.min((sc - predicted).abs());
                }
            }
        }
    }
    worst
}

fn pick_validation(
    design: &FrontendDesign,
    must_cover_deg: &[f64],
    grid: Option<&SubcarrierGrid>,
) -> Result<FrontendDesign, SenseError> {
    if design.ttd_slope() == 0.0 {
        return Err(SenseError::Precondition(
            "TTD slope is zero; nothing sweeps".into(),
        ));
    }
    let s0 = sin_deg(design.theta0_deg());
    let bound = alias_order_bound(design.config());
    'shift: for delta in VALIDATION_SHIFTS_DEG {
        let t0 = s0 + sin_deg(delta);
        let Ok(theta0_tilde) = asin_deg(t0) else {
            continue;
        };
        if theta0_tilde.abs() >= 90.0 {
            continue;
        }
        let Ok(candidate) =
            FrontendDesign::from_slope(*design.config(), theta0_tilde, design.ttd_slope())
        else {
            continue;
        };
        for z in (-bound..=bound).filter(|&z| z != 0) {
            if ambiguity_condition(design, design.theta0_deg(), theta0_tilde, z)? == Some(true) {
                continue 'shift;
            }
        }
        let ranges = split_sensing_ranges(&candidate);
        if !ranges.overlap_free {
            continue;
        }
        if !must_cover_deg
            .iter()
            .all(|&a| ranges.covers_sine(sin_deg(a)))
        {
            continue;
        }
        if let Some(grid) = grid {
            let tol = 0.5 * (max_grid_spacing(design, grid) + max_grid_spacing(&candidate, grid));
            let sines: Vec<f64> = must_cover_deg.iter().map(|&a| sin_deg(a)).collect();
            if wrong_pair_separation(&candidate, &sines) <= 2.0 * tol {
                continue;
            }
        }
        return Ok(candidate);
    }
    Err(SenseError::ValidationUnavailable)
}

/// Intersects two candidate sets in the sine domain and returns the midpoint
/// of the closest agreeing pair.
pub fn intersection_validate(
    first: &CandidateSet,
    second: &CandidateSet,
    sin_tol: f64,
) -> Result<f64, SenseError> {
    let a: Vec<f64> = first.all().map(sin_deg).collect();
    let b: Vec<f64> = second.all().map(sin_deg).collect();
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let d = (x - y).abs();
            if d <= sin_tol {
                pairs.push((i, j, d));
            }
        }
    }
    if pairs.is_empty() {
        return Err(SenseError::NoIntersection { tolerance: sin_tol });
    }
    pairs.sort_by(|p, q| p.2.total_cmp(&q.2));
    let (bi, bj, _) = pairs[0];
    let disjoint = pairs.iter().filter(|p| p.0 != bi && p.1 != bj).count();
    if disjoint > 0 {
        return Err(SenseError::AmbiguousIntersection {
            pairs: disjoint + 1,
            tolerance: sin_tol,
        });
    }
    Ok(asin_deg((a[bi] + b[bj]) / 2.0)?)
}

/// Closest pair between two candidate sets, no tolerance applied.
pub fn nearest_pair(first: &CandidateSet, second: &CandidateSet) -> f64 {
    let mut best = (f64::INFINITY, first.main_deg);
    for x in first.all().map(sin_deg) {
        for y in second.all().map(sin_deg) {
            let d = (x - y).abs();
            if d < best.0 {
                best = (d, ((x + y) / 2.0).clamp(-1.0, 1.0).asin().to_degrees());
            }
        }
    }
    best.1
}

/// Largest spacing between adjacent grid directions on any visible branch.
pub fn max_grid_spacing(design: &FrontendDesign, grid: &SubcarrierGrid) -> f64 {
    let ranges = split_sensing_ranges(design);
    let mut worst = 0.0f64;
    for b in ranges.branches() {
        let mut prev: Option<f64> = None;
        for f in grid.frequencies() {
            let s = design.branch_sine(b.z, f);
            if s.abs() > 1.0 {
                prev = None;
                continue;
            }
            if let Some(p) = prev {
                worst = worst.max((s - p).abs());
            }
            prev = Some(s);
        }
    }
    worst
}

/// Grid search (1° steps) for an overlap-free `(ϑ_0, ϑ_c)` whose swept ranges
/// cover the largest share of `aod_range_deg`.
///
/// Designs right at the overlap boundary leave no room for the validation
/// pass, so every entry of [`VALIDATION_SHIFTS_DEG`] up to `robust_shift_deg` in
/// magnitude must
/// also give overlap-free designs.
pub fn suggest_split_range(
    config: &SystemConfig,
    aod_range_deg: (f64, f64),
    robust_shift_deg: f64,
) -> Result<(f64, f64), SenseError> {
    let (lo, hi) = aod_range_deg;
    check_angle(lo)?;
    check_angle(hi)?;
    if lo >= hi {
        return Err(SenseError::Precondition(format!(
            "empty AoD range [{lo}, {hi}]"
        )));
    }
    let mut best: Option<(f64, (f64, f64))> = None;
    for a in -89..=89 {
        for b in -89..=89 {
            if a == b {
                continue;
            }
            let (t0, tc) = (a as f64, b as f64);
            let Ok(d) = design_frontend(config, t0, tc) else {
                continue;
            };
            let r = split_sensing_ranges(&d);
            if !r.overlap_free {
                continue;
            }
            let s0 = sin_deg(t0);
            let robust = VALIDATION_SHIFTS_DEG
                .iter()
                .filter(|d| d.abs() <= robust_shift_deg)
                .all(|&delta| {
                    asin_deg(s0 + sin_deg(delta))
                        .ok()
                        .and_then(|t| FrontendDesign::from_slope(*config, t, d.ttd_slope()).ok())
                        .is_some_and(|v| split_sensing_ranges(&v).overlap_free)
                });
            if !robust {
                continue;
            }
            let cov = r.angular_coverage(lo, hi);
            if best.is_none_or(|(c, _)| cov > c + 1e-12) {
                best = Some((cov, (t0, tc)));
            }
        }
    }
    best.map(|(_, r)| r).ok_or(SenseError::OverlappingRanges)
}

/// Counts OFDM blocks spent on sensing.
#[derive(Debug, Default)]
pub struct BlockCounter(Cell<usize>);

impl BlockCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> usize {
        self.0.get()
    }

    /// Transmits one sensing block and collects the feedback.
    pub fn sound(
        &self,
        design: &FrontendDesign,
        user: &UserTruth,
        grid: &SubcarrierGrid,
        noise: &NoiseModel,
    ) -> FeedbackReport {
        self.0.set(self.0.get() + 1);
        simulate_feedback(design, user, grid, noise)
    }

    /// Like [`BlockCounter::sound`] but draws noise from a caller-owned RNG.
    pub fn sound_with_rng<R: Rng>(
        &self,
        design: &FrontendDesign,
        user: &UserTruth,
        grid: &SubcarrierGrid,
        variance: f64,
        rng: &mut R,
    ) -> FeedbackReport {
        self.0.set(self.0.get() + 1);
        feedback_with_rng(design, user, grid, variance, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquintSession {
    pub design: FrontendDesign,
    pub report: FeedbackReport,
    pub estimate_deg: f64,
    pub blocks_used: usize,
}

/// One-block squint-only sensing of a single user.
pub fn run_squint_session(
    design: &FrontendDesign,
    user: &UserTruth,
    grid: &SubcarrierGrid,
    noise: &NoiseModel,
) -> Result<SquintSession, SenseError> {
    require_unit_spacing(design)?;
    let blocks = BlockCounter::new();
    let report = blocks.sound(design, user, grid, noise);
    let estimate_deg = sense_squint(design, &report)?;
    Ok(SquintSession {
        design: *design,
        report,
        estimate_deg,
        blocks_used: blocks.get(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassRecord {
    pub design: FrontendDesign,
    pub report: FeedbackReport,
    pub candidates: CandidateSet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSession {
    pub first: PassRecord,
    pub second: PassRecord,
    pub tolerance: f64,
    pub estimate_deg: f64,
    pub blocks_used: usize,
}

/// Reason a split session ended early, with whatever passes completed.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitFailure {
    pub error: SenseError,
    pub first: Option<PassRecord>,
    pub second: Option<PassRecord>,
    pub blocks_used: usize,
}

/// Two-block joint squint + split sensing with intersection validation.
pub fn sense_squint_split(
    config: &SystemConfig,
    theta0_deg: f64,
    thetac_deg: f64,
    user: &UserTruth,
    grid: &SubcarrierGrid,
    noise: &NoiseModel,
) -> Result<SplitSession, SenseError> {
    run_split_session(config, theta0_deg, thetac_deg, user, grid, noise).map_err(|f| f.error)
}

/// Like [`sense_squint_split`] but keeps partial results on failure.
#[allow(clippy::result_large_err)]
pub fn run_split_session(
    config: &SystemConfig,
    theta0_deg: f64,
    thetac_deg: f64,
    user: &UserTruth,
    grid: &SubcarrierGrid,
    noise: &NoiseModel,
) -> Result<SplitSession, SplitFailure> {
    let blocks = BlockCounter::new();
    let fail =
        |error: SenseError, first: Option<PassRecord>, second: Option<PassRecord>| SplitFailure {
            error,
            first,
            second,
            blocks_used: blocks.get(),
        };
    if config.spacing_ratio <= 1.0 {
        return Err(fail(
            SenseError::Precondition(format!(
                "joint squint/split sensing needs P > 1, got P = {}",
                config.spacing_ratio
            )),
            None,
            None,
        ));
    }
    let design =
        design_frontend(config, theta0_deg, thetac_deg).map_err(|e| fail(e.into(), None, None))?;
    if !split_sensing_ranges(&design).overlap_free {
        return Err(fail(SenseError::OverlappingRanges, None, None));
    }

    let report = blocks.sound(&design, user, grid, &noise.for_pass(0));
    let candidates = candidate_angles(&design, &report).map_err(|e| fail(e, None, None))?;
    let first = PassRecord {
        design,
        report,
        candidates,
    };

    let all: Vec<f64> = first.candidates.all().collect();
    let validation = match select_validation_angle_for_grid(&design, &all, grid) {
        Ok(v) => v,
        Err(e) => return Err(fail(e, Some(first), None)),
    };
    let report = blocks.sound(&validation, user, grid, &noise.for_pass(1));
    let candidates = match candidate_angles(&validation, &report) {
        Ok(c) => c,
        Err(e) => return Err(fail(e, Some(first), None)),
    };
    let second = PassRecord {
        design: validation,
        report,
        candidates,
    };

    let tolerance = 0.5 * (max_grid_spacing(&design, grid) + max_grid_spacing(&validation, grid));
    match intersection_validate(&first.candidates, &second.candidates, tolerance) {
        Ok(estimate_deg) => Ok(SplitSession {
            first,
            second,
            tolerance,
            estimate_deg,
            blocks_used: blocks.get(),
        }),
        Err(e) => Err(fail(e, Some(first), Some(second))),
    }
}
