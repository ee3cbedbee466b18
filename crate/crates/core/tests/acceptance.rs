//! Acceptance checks. Runs as a plain binary (`harness = false`) and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rainbeam::experiments::{
    rmse, run_exhaustive_session, run_point, time_overhead, Method, ScenarioConfig, TrialResult,
    UncoveredPolicy,
};
use rainbeam::frontend::{
    beam_direction, design_frontend, frontend_response, sin_deg, split_angles, FrontendDesign,
};
use rainbeam::model::{array_gain, SystemConfig, UserTruth};
use rainbeam::sensing::{
    ambiguity_condition, run_split_session, run_squint_session, split_sensing_ranges,
    suggest_split_range, NoiseModel, SubcarrierGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(20_240_601);
    r.set_stream(stream);
    r
}

fn random_config<R: Rng>(
    r: &mut R,
    p_lo: f64,
    p_hi: f64,
    m_lo: usize,
    m_hi: usize,
    n: usize,
) -> SystemConfig {
    let fc = r.random_range(1e9..1e11);
    let bw = fc * r.random_range(0.01..0.5);
    SystemConfig::new(
        r.random_range(m_lo..=m_hi),
        r.random_range(p_lo..=p_hi),
        fc,
        bw,
        n,
        1,
    )
    .unwrap()
}

fn random_design<R: Rng>(r: &mut R, config: &SystemConfig) -> FrontendDesign {
    loop {
        let t0 = r.random_range(-85.0..85.0);
        let tc = r.random_range(-85.0..85.0);
        if f64::abs(t0 - tc) > 0.5 {
            return design_frontend(config, t0, tc).unwrap();
        }
    }
}

/// Gain of the PS/TTD frontend toward `sine`, from the geometric-series closed
/// form of `Σ_m exp(j2π m (φ − f·t − (P/2)(1+f/fc)·sine))`.
fn oracle_gain(m: usize, phi: f64, slope: f64, p: f64, fc: f64, f: f64, sine: f64) -> f64 {
    let x = phi - f * slope - 0.5 * p * (1.0 + f / fc) * sine;
    let r = x - x.round();
    let den = (PI * r).sin();
    if den.abs() < 1e-15 {
        m as f64
    } else {
        ((PI * m as f64 * r).sin() / den).abs()
    }
}

fn direct_gain(design: &FrontendDesign, angle: f64, f: f64) -> f64 {
    let g = frontend_response(design, f).unwrap();
    array_gain(design.config(), angle, f, &g).unwrap()
}

fn c1_endpoint_gain() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let c = random_config(&mut r, 0.5, 4.0, 2, 256, 16);
        let d = random_design(&mut r, &c);
        let m = c.antenna_count as f64;
        for (angle, f) in [(d.theta0_deg(), 0.0), (d.thetac_deg(), c.bandwidth_hz)] {
            worst = worst.max((direct_gain(&d, angle, f) - m).abs() / m);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && secs < 10.0,
        format!(
            "1000 designs, worst relative error {worst:.2e} (limit 1e-9), {secs:.2} s (limit 10 s)"
        ),
    )
}

fn c2_argmax_oracle() -> Outcome {
    const STEP: f64 = 1e-4;
    let start = Instant::now();
    let cases: Vec<(FrontendDesign, f64)> = {
        let mut r = rng(2);
        (0..200)
            .map(|_| {
                let c = random_config(&mut r, 0.5, 4.0, 8, 128, 16);
                let d = random_design(&mut r, &c);
                let f = r.random_range(0.0..=c.bandwidth_hz);
                (d, f)
            })
            .collect()
    };
    let failures: Vec<String> = cases
        .par_iter()
        .enumerate()
        .filter_map(|(i, (d, f))| {
            let c = d.config();
            let m = c.antenna_count;
            let steps = (180.0 / STEP).round() as usize;
            let gain = |k: usize| {
                let angle = -90.0 + k as f64 * STEP;
                oracle_gain(
                    m,
                    d.phi(),
                    d.ttd_slope(),
                    c.spacing_ratio,
                    c.carrier_hz,
                    *f,
                    sin_deg(angle),
                )
            };
            let mut peaks = Vec::new();
            let (mut prev, mut cur) = (gain(0), gain(1));
            for k in 1..steps {
                let next = gain(k + 1);
                if cur > prev && cur >= next && cur >= 0.99 * m as f64 {
                    peaks.push(-90.0 + k as f64 * STEP);
                }
                prev = cur;
                cur = next;
            }
            let main = beam_direction(d, *f).unwrap();
            let aliases = split_angles(c, main, *f).unwrap().angles_deg();
            let expected: Vec<f64> = std::iter::once(main)
                .chain(aliases.iter().copied())
                .collect();
            let near = |a: f64, b: f64| (a - b).abs() <= STEP * (1.0 + 1e-6);
            let interior = |a: f64| a.abs() < 90.0 - 1e-2;
            let unmatched_peak = peaks
                .iter()
                .find(|&&p| interior(p) && !expected.iter().any(|&e| near(p, e)));
            let unmatched_expected = expected
                .iter()
                .find(|&&e| interior(e) && !peaks.iter().any(|&p| near(p, e)));
            let weak_alias = expected
                .iter()
                .find(|&&e| interior(e) && direct_gain(d, e, *f) < m as f64 * (1.0 - 1e-9));
            match (unmatched_peak, unmatched_expected, weak_alias) {
                (None, None, None) => None,
                other => Some(format!("case {i}: {other:?}")),
            }
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < 120.0,
        format!(
            "200 (design, f) pairs on a 1e-4 deg grid, {} mismatches{}, {secs:.1} s (limit 120 s)",
            failures.len(),
            failures
                .first()
                .map(|s| format!(" e.g. {s}"))
                .unwrap_or_default()
        ),
    )
}

fn c3_monotone_sweep() -> Outcome {
    let mut r = rng(3);
    let mut bad = 0usize;
    for _ in 0..1000 {
        let c = random_config(&mut r, 0.5, 4.0, 2, 256, 16);
        let d = random_design(&mut r, &c);
        let sign = (sin_deg(d.thetac_deg()) - sin_deg(d.theta0_deg())).signum();
        let s: Vec<f64> = (0..100)
            .map(|k| {
                let f = (c.bandwidth_hz * k as f64 / 99.0).min(c.bandwidth_hz);
                sin_deg(beam_direction(&d, f).unwrap())
            })
            .collect();
        if !s.windows(2).all(|w| (w[1] - w[0]) * sign > 0.0) {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!("1000 designs x 100 frequencies, {bad} non-monotone"),
    )
}

/// Sine gap between the two grid directions of branch `z` that bracket `sine`.
fn bracket_gap(d: &FrontendDesign, grid: &SubcarrierGrid, z: i64, sine: f64) -> Option<f64> {
    (0..grid.len() - 1).find_map(|n| {
        let a = d.branch_sine(z, grid.freq(n));
        let b = d.branch_sine(z, grid.freq(n + 1));
        (a.min(b) <= sine && sine <= a.max(b)).then_some((b - a).abs())
    })
}

fn containing_gap(d: &FrontendDesign, grid: &SubcarrierGrid, sine: f64) -> Option<f64> {
    split_sensing_ranges(d)
        .branches()
        .find_map(|b| bracket_gap(d, grid, b.z, sine))
}

/// Designs the split-range search would accept: overlap-free, with aliases,
/// and still overlap-free after the first validation shifts.
fn usable_split_design(d: &FrontendDesign) -> bool {
    let ranges = split_sensing_ranges(d);
    ranges.overlap_free
        && !ranges.splits.is_empty()
        && rainbeam::sensing::VALIDATION_SHIFTS_DEG
            .iter()
            .filter(|d| d.abs() <= rainbeam::scenario::SUGGEST_ROBUST_SHIFT_DEG)
            .all(|&delta| {
                let s = sin_deg(d.theta0_deg()) + sin_deg(delta);
                s.abs() < 1.0
                    && FrontendDesign::from_slope(*d.config(), s.asin().to_degrees(), d.ttd_slope())
                        .is_ok_and(|v| split_sensing_ranges(&v).overlap_free)
            })
}

/// Off-grid users are only covered (half power) when adjacent grid beams
/// overlap; keep draws where the worst gap is under the half-power width.
fn dense_enough(d: &FrontendDesign, grid: &SubcarrierGrid) -> bool {
    let c = d.config();
    let width =
        0.8 / (c.antenna_count as f64 * 0.5 * c.spacing_ratio * c.squint_factor(c.bandwidth_hz));
    rainbeam::sensing::max_grid_spacing(d, grid) <= width
}

fn c4_noiseless_exactness() -> Outcome {
    let mut r = rng(4);
    let quiet = NoiseModel::noiseless();

    // On-grid, squint-only: exact recovery.
    let mut on_grid_ok = 0;
    let mut on_grid_worst = 0.0f64;
    let mut drawn = 0;
    while drawn < 1000 {
        let n = r.random_range(64..=4096);
        let c = random_config(&mut r, 1.0, 1.0, 16, 256, n);
        let d = random_design(&mut r, &c);
        if !split_sensing_ranges(&d).splits.is_empty() {
            continue;
        }
        drawn += 1;
        let grid = SubcarrierGrid::from_config(&c);
        let n = r.random_range(0..grid.len());
        let truth = beam_direction(&d, grid.freq(n)).unwrap();
        let s = run_squint_session(&d, &UserTruth::at(truth).unwrap(), &grid, &quiet).unwrap();
        let err = (sin_deg(s.estimate_deg) - sin_deg(truth)).abs();
        on_grid_worst = on_grid_worst.max(err);
        if err < 1e-9 {
            on_grid_ok += 1;
        }
    }

    // Off-grid, squint-only: within half the bracketing grid gap.
    let mut squint_ok = 0;
    let mut squint_ratio = 0.0f64;
    let mut drawn = 0;
    while drawn < 1000 {
        let n = r.random_range(64..=4096);
        let c = random_config(&mut r, 1.0, 1.0, 16, 256, n);
        let d = random_design(&mut r, &c);
        if !split_sensing_ranges(&d).splits.is_empty() {
            continue;
        }
        let grid = SubcarrierGrid::from_config(&c);
        if !dense_enough(&d, &grid) {
            continue;
        }
        drawn += 1;
        let f = r.random_range(0.0..grid.freq(grid.len() - 1));
        let truth = beam_direction(&d, f).unwrap();
        let gap = bracket_gap(&d, &grid, 0, sin_deg(truth)).unwrap();
        let s = run_squint_session(&d, &UserTruth::at(truth).unwrap(), &grid, &quiet).unwrap();
        let ratio = (sin_deg(s.estimate_deg) - sin_deg(truth)).abs() / (0.5 * gap);
        squint_ratio = squint_ratio.max(ratio);
        if ratio <= 1.0 {
            squint_ok += 1;
        }
    }

    // Off-grid, squint + split: within half the larger bracketing gap of the
    // two passes (the estimate is the midpoint of the two readings).
    let mut split_ok = 0;
    let mut split_ratio = 0.0f64;
    let mut split_total = 0;
    let mut split_failed = 0;
    let mut split_errors = std::collections::BTreeMap::<String, usize>::new();
    while split_total < 1000 {
        let n = r.random_range(256..=4096);
        let c = random_config(&mut r, 1.5, 4.0, 32, 256, n);
        let d = random_design(&mut r, &c);
        let ranges = split_sensing_ranges(&d);
        if !usable_split_design(&d) {
            continue;
        }
        let grid = SubcarrierGrid::from_config(&c);
        if !dense_enough(&d, &grid) {
            continue;
        }
        let branches: Vec<_> = ranges.branches().copied().collect();
        let b = branches[r.random_range(0..branches.len())];
        let f = r.random_range(0.0..grid.freq(grid.len() - 1));
        let sine = d.branch_sine(b.z, f);
        if sine.abs() >= 1.0 || sine.abs() > sin_deg(89.0) {
            continue;
        }
        let truth = sine.asin().to_degrees();
        let user = UserTruth::at(truth).unwrap();
        split_total += 1;
        match run_split_session(&c, d.theta0_deg(), d.thetac_deg(), &user, &grid, &quiet) {
            Ok(s) => {
                let g1 = bracket_gap(&d, &grid, b.z, sine).unwrap();
                let g2 = containing_gap(&s.second.design, &grid, sine).unwrap_or(f64::INFINITY);
                let ratio = (sin_deg(s.estimate_deg) - sine).abs() / (0.5 * g1.max(g2));
                split_ratio = split_ratio.max(ratio);
                if ratio <= 1.0 {
                    split_ok += 1;
                }
            }
            Err(e) => {
                split_failed += 1;
                *split_errors
                    .entry(
                        format!("{:?}", e.error)
                            .split(['(', ' ', '{'])
                            .next()
                            .unwrap()
                            .to_string(),
                    )
                    .or_insert(0) += 1;
            }
        }
    }

    outcome(
        on_grid_ok == 1000 && squint_ok == 1000 && split_ok == split_total - split_failed,
        format!(
            "on-grid squint {on_grid_ok}/1000 exact (worst {on_grid_worst:.1e}); off-grid squint {squint_ok}/1000 \
             within half gap (worst ratio {squint_ratio:.4}); off-grid split {split_ok}/{} \
             estimates within half the wider pass gap (worst ratio {split_ratio:.4}); \
             {split_failed} of {split_total} split sessions gave no estimate: {split_errors:?}",
            split_total - split_failed
        ),
    )
}

fn scenario(method: Method, p: f64, aod: (f64, f64), range: (f64, f64)) -> ScenarioConfig {
    ScenarioConfig {
        method,
        spacing_ratio: p,
        carrier_hz: 30e9,
        bandwidth_hz: 6e9,
        users_per_trial: 1,
        aod_range_deg: aod,
        sensing_range_deg: range,
        snr_db: vec![0.0],
        subcarriers: vec![1024],
        antennas: vec![128],
        trials: 500,
        seed: 0,
        uncovered: UncoveredPolicy::Exclude,
    }
}

fn per_trial_sq(trials: &[Vec<TrialResult>]) -> Vec<Option<f64>> {
    trials
        .iter()
        .map(|t| {
            let e: Vec<f64> = t
                .iter()
                .filter_map(|r| r.estimate_deg.map(|x| (x - r.truth_deg).powi(2)))
                .collect();
            (!e.is_empty()).then(|| e.iter().sum::<f64>() / e.len() as f64)
        })
        .collect()
}

/// Mean and standard error of the paired per-trial MSE difference `b − a`.
fn paired_increase(a: &[Option<f64>], b: &[Option<f64>]) -> (f64, f64) {
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some((*y)? - (*x)?))
        .collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn c5_snr_trends() -> Outcome {
    let start = Instant::now();
    let snrs: Vec<f64> = (0..=6).map(|k| 5.0 * k as f64).collect();
    let aods = [(-80.0, 80.0), (0.0, 20.0), (60.0, 80.0)];
    let ns = [1024usize, 50_000];
    let mut rmse_table = vec![vec![vec![0.0; snrs.len()]; ns.len()]; aods.len()];
    let mut strict_violations = Vec::new();
    let mut significant_violations = Vec::new();
    for (ai, &aod) in aods.iter().enumerate() {
        let sc = scenario(Method::SquintOnly, 1.0, aod, (-80.0, 80.0));
        for (ni, &n) in ns.iter().enumerate() {
            let mut prev: Option<Vec<Option<f64>>> = None;
            for (si, &snr) in snrs.iter().enumerate() {
                let trials = run_point(&sc, 128, n, snr).unwrap();
                rmse_table[ai][ni][si] = rmse(&trials).unwrap();
                let sq = per_trial_sq(&trials);
                if let Some(p) = &prev {
                    let label = format!("AoD {aod:?} N={n} {}->{} dB", snrs[si - 1], snr);
                    if rmse_table[ai][ni][si] > rmse_table[ai][ni][si - 1] {
                        strict_violations.push(format!(
                            "{label} ({:.4} -> {:.4})",
                            rmse_table[ai][ni][si - 1],
                            rmse_table[ai][ni][si]
                        ));
                        let (mean, se) = paired_increase(p, &sq);
                        if mean > 2.0 * se {
                            significant_violations
                                .push(format!("{label} (MSE +{mean:.4} > 2 SE {:.4})", 2.0 * se));
                        }
                    }
                }
                prev = Some(sq);
            }
        }
    }
    let last = snrs.len() - 1;
    let floors: Vec<String> = aods
        .iter()
        .enumerate()
        .map(|(ai, aod)| {
            format!(
                "{aod:?}: {:.4} vs {:.4}",
                rmse_table[ai][0][last], rmse_table[ai][1][last]
            )
        })
        .collect();
    let floors_ok = (0..aods.len()).all(|ai| rmse_table[ai][0][last] > rmse_table[ai][1][last]);
    let narrow_ok = (0..ns.len())
        .all(|ni| (0..snrs.len()).all(|si| rmse_table[1][ni][si] <= rmse_table[2][ni][si]));
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "SNR trend: {} step increases, {} statistically significant (paired 2 SE){}; \
         30 dB floors N=1024 vs N=50000 {}; [0,20] <= [60,80] at every point: {narrow_ok}; \
         RMSE at 30 dB, N=1024: [-80,80] {:.3}, [0,20] {:.4}, [60,80] {:.4}; {secs:.0} s (target 600 s)",
        strict_violations.len(),
        significant_violations.len(),
        if strict_violations.is_empty() { String::new() } else { format!(" [{}]", strict_violations.join("; ")) },
        floors.join(", "),
        rmse_table[0][0][last],
        rmse_table[1][0][last],
        rmse_table[2][0][last],
    );
    outcome(
        significant_violations.is_empty() && floors_ok && narrow_ok && secs < 600.0,
        detail,
    )
}

fn c6_method_comparison() -> Outcome {
    let aod = (-80.0, 80.0);
    let point = |sc: &ScenarioConfig| {
        let t = run_point(sc, 128, 1024, 20.0).unwrap();
        let cov = t.iter().flatten().filter(|r| r.covered).count() as f64 / t.len() as f64;
        (rmse(&t).unwrap(), cov)
    };
    let (squint, squint_cov) = point(&scenario(Method::SquintOnly, 1.0, aod, aod));
    let mut split = Vec::new();
    for p in [2.0, 4.0] {
        let c = SystemConfig::new(128, p, 30e9, 6e9, 1024, 1).unwrap();
        let range =
            suggest_split_range(&c, aod, rainbeam::scenario::SUGGEST_ROBUST_SHIFT_DEG).unwrap();
        let (v, cov) = point(&scenario(Method::SquintSplit, p, aod, range));
        split.push((p, range, v, cov));
    }
    let pass = split.iter().all(|s| s.2 < squint) && split[1].2 <= split[0].2;
    let parts: Vec<String> = split
        .iter()
        .map(|(p, r, v, cov)| format!("split P={p} range {r:?}: {v:.4} deg (coverage {cov:.3})"))
        .collect();
    outcome(
        pass,
        format!(
            "N=1024, 20 dB: squint-only {squint:.3} deg (coverage {squint_cov:.3}); {}",
            parts.join("; ")
        ),
    )
}

fn c7_intersection() -> Outcome {
    let mut r = rng(7);
    let quiet = NoiseModel::noiseless();
    let (mut sessions, mut good, mut skipped) = (0usize, 0usize, 0usize);
    let mut first_bad = None;
    while sessions < 1000 {
        let n = r.random_range(512..=4096);
        let c = random_config(&mut r, 1.5, 4.0, 32, 256, n);
        let d = random_design(&mut r, &c);
        let ranges = split_sensing_ranges(&d);
        if !usable_split_design(&d) {
            continue;
        }
        let grid = SubcarrierGrid::from_config(&c);
        if !dense_enough(&d, &grid) {
            continue;
        }
        let branches: Vec<_> = ranges.branches().copied().collect();
        let b = branches[r.random_range(0..branches.len())];
        let f = r.random_range(0.0..grid.freq(grid.len() - 1));
        let sine = d.branch_sine(b.z, f);
        if sine.abs() > sin_deg(89.0) {
            continue;
        }
        let truth = sine.asin().to_degrees();
        let out = run_split_session(
            &c,
            d.theta0_deg(),
            d.thetac_deg(),
            &UserTruth::at(truth).unwrap(),
            &grid,
            &quiet,
        );
        let (first, second, tol, est) = match out {
            Ok(s) => (s.first, s.second, s.tolerance, Some(s.estimate_deg)),
            Err(f) => match (f.first, f.second) {
                (Some(a), Some(b)) => {
                    let tol = 0.5
                        * (rainbeam::sensing::max_grid_spacing(&a.design, &grid)
                            + rainbeam::sensing::max_grid_spacing(&b.design, &grid));
                    (a, b, tol, None)
                }
                _ => {
                    skipped += 1;
                    continue;
                }
            },
        };
        sessions += 1;
        let pairs: Vec<(f64, f64)> = first
            .candidates
            .all()
            .flat_map(|x| {
                second
                    .candidates
                    .all()
                    .map(move |y| (sin_deg(x), sin_deg(y)))
            })
            .filter(|(x, y)| (x - y).abs() <= tol)
            .collect();
        let singleton_true = pairs.len() == 1
            && (pairs[0].0 - sine).abs() <= tol
            && (pairs[0].1 - sine).abs() <= tol;
        let estimate_true = est.is_some_and(|e| (sin_deg(e) - sine).abs() <= tol);
        if singleton_true && estimate_true {
            good += 1;
        } else if first_bad.is_none() {
            first_bad = Some(format!(
                "truth {truth:.4}, {} matching pairs, estimate {est:?}",
                pairs.len()
            ));
        }
    }

    let mut r = rng(70);
    let (mut feasible, mut flagged) = (0usize, 0usize);
    for _ in 0..1000 {
        let c = random_config(&mut r, 1.5, 4.0, 32, 256, 64);
        let d = random_design(&mut r, &c);
        let bound = rainbeam::frontend::alias_order_bound(&c);
        for z in (-bound..=bound).filter(|&z| z != 0) {
            if let Some(v) = ambiguity_condition(&d, d.theta0_deg(), d.theta0_deg(), z).unwrap() {
                feasible += 1;
                if v {
                    flagged += 1;
                }
            }
        }
    }
    let rate = good as f64 / sessions as f64;
    outcome(
        rate >= 0.999 && feasible > 0 && flagged == feasible,
        format!(
            "{good}/{sessions} validated sessions give a true singleton ({:.2}%, limit 99.9%){}; \
             {skipped} sessions without a validation pass not counted; \
             unchanged initial angle flagged ambiguous {flagged}/{feasible}",
            100.0 * rate,
            first_bad
                .map(|s| format!(" first miss: {s}"))
                .unwrap_or_default()
        ),
    )
}

fn c8_time_overhead() -> Outcome {
    let quiet = NoiseModel::noiseless();
    let c1 = SystemConfig::new(128, 1.0, 30e9, 6e9, 1024, 1).unwrap();
    let d1 = design_frontend(&c1, 0.0, 20.0).unwrap();
    let grid = SubcarrierGrid::from_config(&c1);
    let squint: Vec<usize> = [1.0, 7.5, 13.0, 19.0]
        .iter()
        .map(|&a| {
            run_squint_session(&d1, &UserTruth::at(a).unwrap(), &grid, &quiet)
                .unwrap()
                .blocks_used
        })
        .collect();
    let c2 = SystemConfig::new(128, 2.0, 30e9, 6e9, 1024, 1).unwrap();
    let split: Vec<usize> = [-50.0, -20.0, 0.0, 35.0]
        .iter()
        .map(|&a| {
            run_split_session(&c2, -42.0, 9.0, &UserTruth::at(a).unwrap(), &grid, &quiet)
                .unwrap()
                .blocks_used
        })
        .collect();
    let q = 1024;
    let sweep =
        run_exhaustive_session(&c1, (-80.0, 80.0), q, &UserTruth::at(12.0).unwrap(), &quiet)
            .unwrap()
            .blocks_used;
    let pass = squint
        .iter()
        .all(|&b| b == time_overhead(Method::SquintOnly, q) && b == 1)
        && split
            .iter()
            .all(|&b| b == time_overhead(Method::SquintSplit, q) && b == 2)
        && sweep == time_overhead(Method::Exhaustive, q)
        && sweep == q;
    outcome(
        pass,
        format!("squint-only {squint:?}, squint-split {split:?}, exhaustive Q={q}: {sweep}"),
    )
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("det.toml");
    std::fs::write(
        &scenario,
        r#"
method = "squint-split"
spacing_ratio = 2
carrier = "30GHz"
bandwidth = "6GHz"
aod_range_deg = [-80, 80]
snr_db = [0, 10, 20]
subcarriers = [512, 1024]
antennas = [64]
trials = 100
users_per_trial = 2
seed = 11
"#,
    )
    .unwrap();
    let run = |out: &Path, threads: Option<&str>, seed_override: bool| {
        let src = if seed_override {
            let alt = dir.path().join("alt.toml");
            std::fs::write(
                &alt,
                std::fs::read_to_string(&scenario)
                    .unwrap()
                    .replace("seed = 11", "seed = 12"),
            )
            .unwrap();
            alt
        } else {
            scenario.clone()
        };
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_rainbeam"));
        cmd.args([
            "sweep",
            src.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        if let Some(t) = threads {
            cmd.env("RAYON_NUM_THREADS", t);
        }
        let status = cmd.output().unwrap().status;
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let a = run(&dir.path().join("a.csv"), None, false);
    let b = run(&dir.path().join("b.csv"), None, false);
    let serial = run(&dir.path().join("c.csv"), Some("1"), false);
    let other = run(&dir.path().join("d.csv"), None, true);
    let pass = a == b && a == serial && a != other;
    outcome(
        pass,
        format!(
            "two runs identical: {}; single-thread run identical: {}; different seed differs: {} ({} bytes)",
            a == b,
            a == serial,
            a != other,
            a.len()
        ),
    )
}

fn main() {
    type Check = (u32, &'static str, fn() -> Outcome);
    let criteria: [Check; 9] = [
        (1, "endpoint-gain exactness", c1_endpoint_gain),
        (2, "argmax oracle", c2_argmax_oracle),
        (3, "monotone sweep", c3_monotone_sweep),
        (4, "noiseless exactness", c4_noiseless_exactness),
        (5, "RMSE vs SNR trends (squint-only, M=128)", c5_snr_trends),
        (
            6,
            "squint-split beats squint-only (N=1024, 20 dB)",
            c6_method_comparison,
        ),
        (7, "intersection validation", c7_intersection),
        (8, "time overhead", c8_time_overhead),
        (9, "determinism", c9_determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    let mut total = Duration::ZERO;
    for (n, name, check) in criteria {
        let start = Instant::now();
        let out = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        total += took;
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {n} {}: {name}: {} [{:.1} s]",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of 9 passed in {:.0} s",
        9 - failed,
        total.as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
