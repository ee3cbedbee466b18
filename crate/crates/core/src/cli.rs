//! `rainbeam` command line.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or parse error,
//! 3 user not inside any sensed range.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::experiments::{
    emit_results, run_exhaustive_session, run_scenario_with_progress, snr_to_noise, write_results,
    ExperimentError, Method,
};
use crate::frontend::{design_frontend, sin_deg, FrontendDesign};
use crate::model::{array_factor, SystemConfig, UserTruth};
use crate::scenario::{
    parse_frequency, parse_scenario, to_toml, ScenarioError, SUGGEST_ROBUST_SHIFT_DEG,
};
use crate::sensing::{
    nearest_pair, run_split_session, run_squint_session, split_sensing_ranges, suggest_split_range,
    NoiseModel, PassRecord, SenseError, SubcarrierGrid,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_IN_RANGE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "rainbeam",
    version,
    about = "Wideband rainbow-beam user sensing with TTD/PS frontends"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate array gain over subcarriers and angles as CSV.
    Beampattern(BeamArgs),
    /// Sense one user and print every intermediate step.
    Sense(SenseArgs),
    /// Run a Monte-Carlo scenario file and write an RMSE table as CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Geometry {
    /// Antenna count M.
    #[arg(long = "m", default_value_t = 128)]
    pub antennas: usize,
    /// Spacing in half carrier wavelengths (d = P·λc/2).
    #[arg(long = "p", default_value_t = 1.0)]
    pub spacing_ratio: f64,
    /// Carrier frequency, e.g. 30GHz.
    #[arg(long = "fc", default_value = "30GHz", value_parser = parse_frequency)]
    pub carrier_hz: f64,
    /// Bandwidth, e.g. 6GHz.
    #[arg(long = "bw", default_value = "6GHz", value_parser = parse_frequency)]
    pub bandwidth_hz: f64,
    /// Subcarrier count N.
    #[arg(long = "n", default_value_t = 1024)]
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
}

#[derive(Debug, Args)]
pub struct BeamArgs {
    #[command(flatten)]
    pub geometry: Geometry,
    /// Beam direction at f = 0, degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: f64,
    /// Beam direction at f = F, degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub thetac: f64,
    /// Number of angle samples across (-90°, 90°).
    #[arg(long, default_value_t = 1801)]
    pub angle_grid: usize,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SenseArgs {
    #[command(flatten)]
    pub geometry: Geometry,
    #[arg(long, value_enum, default_value = "squint-only")]
    pub method: Method,
    /// True user direction, degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub user_angle: f64,
    /// SNR in dB; `inf` for a noiseless run.
    #[arg(long, default_value_t = f64::INFINITY, allow_hyphen_values = true)]
    pub snr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sensing range start. Defaults to -80° (squint-only, exhaustive) or a
    /// searched overlap-free design (squint-split).
    #[arg(long, allow_hyphen_values = true, requires = "thetac")]
    pub theta0: Option<f64>,
    /// Sensing range end; given together with `--theta0`.
    #[arg(long, allow_hyphen_values = true, requires = "theta0")]
    pub thetac: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Scenario TOML file.
    pub scenario: PathBuf,
    /// Validate and print the resolved scenario without running it.
    #[arg(long)]
    pub dry_run: bool,
    /// Output CSV, overriding the scenario's `output` key.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = if e.use_stderr() {
                e.render().to_string()
            } else {
                e.to_string()
            };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{text}");
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let result = match cli.command {
        Command::Beampattern(a) => beampattern(&a, out),
        Command::Sense(a) => sense(&a, out),
        Command::Sweep(a) => sweep(&a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "rainbeam: {msg}");
            code
        }
    }
}

struct Failure(i32, String);

fn usage(msg: impl ToString) -> Failure {
    Failure(EXIT_USAGE, msg.to_string())
}

fn runtime(msg: impl ToString) -> Failure {
    Failure(EXIT_RUNTIME, msg.to_string())
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| runtime(format!("{}: {e}", path.display()))
}

fn beampattern(a: &BeamArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = a.geometry.system().map_err(usage)?;
    if a.angle_grid == 0 {
        return Err(usage("--angle-grid must be positive"));
    }
    let design = design_frontend(&config, a.theta0, a.thetac).map_err(usage)?;
    let grid = SubcarrierGrid::from_config(&config);
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["f_hz", "angle_deg", "gain"])
            .map_err(runtime)?;
        for f in grid.frequencies() {
            for i in 0..a.angle_grid {
                let angle = -90.0 + 180.0 * (i as f64 + 0.5) / a.angle_grid as f64;
                let gain = array_factor(
                    config.antenna_count,
                    design.phase_mismatch(sin_deg(angle), f),
                )
                .norm();
                w.serialize((f, angle, gain)).map_err(runtime)?;
            }
        }
        w.flush().map_err(runtime)?;
    }
    match &a.out {
        Some(path) => std::fs::write(path, buf).map_err(io_at(path)),
        None => out.write_all(&buf).map_err(runtime),
    }
}

fn fmt_angles(v: impl Iterator<Item = f64>) -> String {
    let parts: Vec<String> = v.map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn print_design(out: &mut dyn Write, label: &str, d: &FrontendDesign) -> std::io::Result<()> {
    writeln!(
        out,
        "{label:<14}theta0={:.4} thetac={:.4} ttd_slope_s={:.6e}",
        d.theta0_deg(),
        d.thetac_deg(),
        d.ttd_slope()
    )?;
    let ranges = split_sensing_ranges(d);
    for b in ranges.branches() {
        writeln!(
            out,
            "{:<14}z={:+} {:.4} -> {:.4}",
            "", b.z, b.start_deg, b.end_deg
        )?;
    }
    Ok(())
}

fn print_pass(out: &mut dyn Write, label: &str, p: &PassRecord) -> std::io::Result<()> {
    print_design(out, label, &p.design)?;
    writeln!(
        out,
        "{:<14}subcarrier={} freq_hz={} candidates={}",
        "",
        p.report.subcarrier_index,
        p.report.freq_hz,
        fmt_angles(p.candidates.all())
    )
}

fn sense(a: &SenseArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = a.geometry.system().map_err(usage)?;
    let user = UserTruth::new(a.user_angle, Complex64::new(1.0, 0.0), 0.0).map_err(usage)?;
    if a.snr.is_nan() {
        return Err(usage("--snr must be a number or inf"));
    }
    let noise = NoiseModel::new(snr_to_noise(&config, a.snr), a.seed);
    let grid = SubcarrierGrid::from_config(&config);
    let range = match (a.theta0.zip(a.thetac), a.method) {
        (Some(r), _) => r,
        (None, Method::SquintSplit) => {
            suggest_split_range(&config, (-80.0, 80.0), SUGGEST_ROBUST_SHIFT_DEG).map_err(usage)?
        }
        (None, _) => (-80.0, 80.0),
    };
    let io = |e: std::io::Error| runtime(e);
    writeln!(out, "{:<14}{}", "method", a.method).map_err(io)?;
    writeln!(out, "{:<14}{}", "truth_deg", a.user_angle).map_err(io)?;
    let not_in_range = || {
        Failure(
            EXIT_NOT_IN_RANGE,
            format!("user at {}° is not inside any sensed range", a.user_angle),
        )
    };
    let (estimate, blocks) = match a.method {
        Method::SquintOnly => {
            let design = design_frontend(&config, range.0, range.1).map_err(usage)?;
            print_design(out, "design", &design).map_err(io)?;
            match run_squint_session(&design, &user, &grid, &noise) {
                Ok(s) => {
                    writeln!(
                        out,
                        "{:<14}subcarrier={} freq_hz={}",
                        "feedback", s.report.subcarrier_index, s.report.freq_hz
                    )
                    .map_err(io)?;
                    (s.estimate_deg, s.blocks_used)
                }
                Err(SenseError::NotInRange) => return Err(not_in_range()),
                Err(e @ SenseError::Precondition(_)) => return Err(usage(e)),
                Err(e) => return Err(runtime(e)),
            }
        }
        Method::SquintSplit => {
            match run_split_session(&config, range.0, range.1, &user, &grid, &noise) {
                Ok(s) => {
                    print_pass(out, "pass 1", &s.first).map_err(io)?;
                    print_pass(out, "pass 2", &s.second).map_err(io)?;
                    writeln!(out, "{:<14}{:.6e}", "sin_tolerance", s.tolerance).map_err(io)?;
                    (s.estimate_deg, s.blocks_used)
                }
                Err(f) => {
                    if let Some(p) = &f.first {
                        print_pass(out, "pass 1", p).map_err(io)?;
                    }
                    if let Some(p) = &f.second {
                        print_pass(out, "pass 2", p).map_err(io)?;
                    }
                    if let (Some(a), Some(b)) = (&f.first, &f.second) {
                        let guess = nearest_pair(&a.candidates, &b.candidates);
                        writeln!(out, "{:<14}{guess:.6}", "nearest_deg").map_err(io)?;
                    }
                    writeln!(out, "{:<14}{}", "blocks", f.blocks_used).map_err(io)?;
                    return Err(match f.error {
                        SenseError::NotInRange => not_in_range(),
                        e @ (SenseError::Precondition(_)
                        | SenseError::OverlappingRanges
                        | SenseError::Design(_)) => usage(e),
                        e => runtime(e),
                    });
                }
            }
        }
        Method::Exhaustive => {
            let s = run_exhaustive_session(&config, range, config.subcarrier_count, &user, &noise)
                .map_err(usage)?;
            if !s.covered {
                return Err(not_in_range());
            }
            (s.estimate_deg, s.blocks_used)
        }
    };
    writeln!(out, "{:<14}{estimate:.6}", "estimate_deg").map_err(io)?;
    writeln!(out, "{:<14}{:.6}", "error_deg", estimate - a.user_angle).map_err(io)?;
    writeln!(out, "{:<14}{blocks}", "blocks").map_err(io)
}

fn sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let source = std::fs::read_to_string(&a.scenario).map_err(io_at(&a.scenario))?;
    let scenario = parse_scenario(&source).map_err(|e| match e {
        ScenarioError::Parse { .. } => usage(format!("{}:{e}", a.scenario.display())),
        ScenarioError::Invalid(_) => usage(format!("{}: {e}", a.scenario.display())),
    })?;
    if a.dry_run {
        return out
            .write_all(to_toml(&scenario).as_bytes())
            .map_err(runtime);
    }
    let table = run_scenario_with_progress(&scenario.config, |s| {
        let _ = writeln!(
            err,
            "M={} N={} snr_db={} rmse_deg={:.6} coverage={:.3}",
            s.antennas, s.subcarriers, s.snr_db, s.rmse_deg, s.coverage_rate
        );
    })
    .map_err(|e| match e {
        ExperimentError::Config(_) => usage(e),
        e => runtime(e),
    })?;
    match a.out.as_ref().or(scenario.output.as_ref()) {
        Some(path) => emit_results(&table, path).map_err(runtime),
        None => write_results(&table, out).map_err(runtime),
    }
}
