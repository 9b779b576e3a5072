//! Command-line front end of the `marg` binary.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 evaluation
//! thresholds not met.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::Ordering;
use std::sync::{Arc, Mutex};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;
use thiserror::Error;

use crate::ahrs::{Algorithm, FilterConfig};
use crate::calibration::{CalibrationParams, CalibrationSession, Phase, MIN_OCTANTS};
use crate::io::{self as csvio, CsvError};
use crate::motion::{detect_taps, TapConfig};
use crate::pipeline::{Pipeline, PipelineConfig};
use crate::protocol::{DeviceConfig, LoopingSource, Server, SharedSource, StationarySource};
use crate::sim::evaluate::{evaluate, evaluate_window, Metrics};
use crate::sim::sensor::{AccelRange, BaroResolution, GyroRange, MagRange, SensorErrorModel};
use crate::sim::{integrate_truth, synthesize, Scenario};
use crate::vertical::SEA_LEVEL_PRESSURE;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_THRESHOLD: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Threshold(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Threshold(_) => EXIT_THRESHOLD,
        }
    }
}

impl From<CsvError> for CliError {
    fn from(e: CsvError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn data<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Data(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(name = "marg", version, about = "MARG sensor fusion toolkit", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a sensor trace and its ground truth from a named scenario
    Simulate(SimulateArgs),
    /// Run attitude and altitude fusion over a trace
    Fuse(FuseArgs),
    /// Fit sensor calibration from a guided-calibration trace
    Calibrate(CalibrateArgs),
    /// Score estimates against ground truth
    Evaluate(EvaluateArgs),
    /// Serve the byte protocol over TCP from a simulated board
    Serve(ServeArgs),
    /// Turn roll and pitch into pointer deltas
    Mouse(MouseArgs),
    /// Detect taps and double taps in a trace
    Taps(TapsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ErrorModelKind {
    Ideal,
    Realistic,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print scenario names and exit
    #[arg(long)]
    pub list_scenarios: bool,
    /// Replace the scenario's sensor error model
    #[arg(long, value_enum)]
    pub error_model: Option<ErrorModelKind>,
    /// deg/s: 250, 500, 1000 or 2000
    #[arg(long)]
    pub gyro_range: Option<f64>,
    /// g: 2, 4, 8 or 16
    #[arg(long)]
    pub accel_range: Option<f64>,
    /// gauss: 0.88, 1.3, 1.9, 2.5, 4.0, 4.7, 5.6 or 8.1
    #[arg(long)]
    pub mag_range: Option<f64>,
    /// mbar: 0.065, 0.042, 0.027, 0.018 or 0.012
    #[arg(long)]
    pub baro_resolution: Option<f64>,
    /// mbar
    #[arg(long)]
    pub baro_noise: Option<f64>,
    /// Hz
    #[arg(long)]
    pub rate: Option<f64>,
    /// Trace output, default `<out-dir>/<scenario>.trace.csv`
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Truth output, default `<out-dir>/<scenario>.truth.csv`
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// mahony or madgwick
    #[arg(long, default_value = "mahony")]
    pub filter: Algorithm,
    #[arg(long, default_value_t = 0.5)]
    pub kp: f64,
    #[arg(long, default_value_t = 0.0)]
    pub ki: f64,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    /// Altitude filter time constant, s
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// mbar
    #[arg(long, default_value_t = SEA_LEVEL_PRESSURE)]
    pub reference_pressure: f64,
    /// Start from the attitude implied by the first sample
    #[arg(long)]
    pub warm_start: bool,
    /// Ignore the magnetometer (6-DOF fusion)
    #[arg(long)]
    pub no_mag: bool,
    /// Calibration file written by `calibrate`
    #[arg(long)]
    pub calibration: Option<PathBuf>,
}

impl FilterArgs {
    fn pipeline_config(&self) -> Result<PipelineConfig, CliError> {
        let calibration = match &self.calibration {
            Some(path) => read_calibration(path)?,
            None => CalibrationParams::IDENTITY,
        };
        let config = PipelineConfig {
            filter: FilterConfig { algorithm: self.filter, kp: self.kp, ki: self.ki, beta: self.beta, ..Default::default() },
            calibration,
            use_mag: !self.no_mag,
            tau: self.tau,
            reference_pressure: self.reference_pressure,
            warm_start: self.warm_start,
            ..Default::default()
        };
        Pipeline::new(config).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[command(flatten)]
    pub filter: FilterArgs,
    /// Zero altitude at the first sample
    #[arg(long)]
    pub tare: bool,
    /// Estimates output, default standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Calibration output, default standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print fit residuals per sensor
    #[arg(long)]
    pub report: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub estimates: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Only score rows with t >= this, s
    #[arg(long)]
    pub from: Option<f64>,
    /// Only score rows with t < this, s
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
    /// deg
    #[arg(long)]
    pub max_attitude_rms: Option<f64>,
    /// deg
    #[arg(long)]
    pub max_attitude_error: Option<f64>,
    /// m
    #[arg(long)]
    pub max_altitude_rmse: Option<f64>,
    /// s
    #[arg(long)]
    pub max_convergence_time: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:5760")]
    pub listen: String,
    /// Serve a synthesized scenario (looped) instead of a still board
    #[arg(long, conflicts_with = "trace")]
    pub scenario: Option<String>,
    /// Serve a recorded trace (looped)
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Source sample rate, Hz
    #[arg(long, default_value_t = 100.0)]
    pub rate: f64,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Debug, Args)]
pub struct MouseArgs {
    #[arg(long)]
    pub estimates: PathBuf,
    /// px per degree
    #[arg(long, default_value_t = 2.0)]
    pub gain: f64,
    /// deg
    #[arg(long, default_value_t = 1.0)]
    pub deadzone: f64,
}

#[derive(Debug, Args)]
pub struct TapsArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Attitudes to use; fused from the trace when absent
    #[arg(long)]
    pub estimates: Option<PathBuf>,
    #[command(flatten)]
    pub filter: FilterArgs,
    /// g
    #[arg(long, default_value_t = 2.5)]
    pub threshold: f64,
    /// s
    #[arg(long, default_value_t = 0.05)]
    pub max_pulse_width: f64,
    /// s
    #[arg(long, default_value_t = 0.4)]
    pub double_tap_window: f64,
    /// s
    #[arg(long, default_value_t = 0.1)]
    pub dead_time: f64,
}

/// Pointer deltas for one attitude: `round(gain·roll)`, `round(gain·pitch)`,
/// each zero while its angle is inside the deadzone (degrees throughout).
pub fn mouse_delta(roll_deg: f64, pitch_deg: f64, gain: f64, deadzone_deg: f64) -> (i64, i64) {
    let axis = |angle: f64| if angle.abs() < deadzone_deg { 0 } else { (gain * angle).round() as i64 };
    (axis(roll_deg), axis(pitch_deg))
}

/// Expands `--config FILE` into flags. Each non-blank, non-comment line is
/// `key = value`, where `key` is a flag name; `true`/`false` toggle
/// switches. Flags given on the command line win over the file.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut config = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => {
                let path = it.next().ok_or_else(|| CliError::Usage("--config needs a file".into()))?;
                config = Some(PathBuf::from(path));
            }
            Some(s) if s.starts_with("--config=") => config = Some(PathBuf::from(&s["--config=".len()..])),
            _ => rest.push(a),
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let text = fs::read_to_string(&path).map_err(data(&path.display().to_string()))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        match value.trim() {
            "true" => extra.push(OsString::from(flag)),
            "false" => {}
            v => {
                extra.push(OsString::from(flag));
                extra.push(OsString::from(v));
            }
        }
    }
    // program name, subcommand, file flags, then the command line's own flags
    let split = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map_or(rest.len(), |p| p + 2);
    let tail = rest.split_off(split.min(rest.len()));
    rest.extend(extra);
    rest.extend(tail);
    Ok(rest)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Fuse(a) => fuse(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Serve(a) => serve(a),
        Command::Mouse(a) => mouse(a),
        Command::Taps(a) => taps(a),
    }
}

fn scenario(name: &str) -> Result<Scenario, CliError> {
    Scenario::by_name(name).ok_or_else(|| {
        CliError::Usage(format!("unknown scenario `{name}` (available: {})", Scenario::names().join(", ")))
    })
}

fn range_flag<T>(value: Option<f64>, parse: fn(f64) -> Option<T>, flag: &str) -> Result<Option<T>, CliError> {
    value
        .map(|v| parse(v).ok_or_else(|| CliError::Usage(format!("--{flag} {v} is not a supported setting"))))
        .transpose()
}

fn error_model(a: &SimulateArgs, base: SensorErrorModel) -> Result<SensorErrorModel, CliError> {
    let mut m = match a.error_model {
        Some(ErrorModelKind::Ideal) => SensorErrorModel { rate_hz: base.rate_hz, ..SensorErrorModel::ideal() },
        Some(ErrorModelKind::Realistic) => SensorErrorModel { rate_hz: base.rate_hz, ..SensorErrorModel::realistic() },
        None => base,
    };
    if let Some(r) = range_flag(a.gyro_range, GyroRange::from_dps, "gyro-range")? {
        m.gyro_range = r;
    }
    if let Some(r) = range_flag(a.accel_range, AccelRange::from_g, "accel-range")? {
        m.accel_range = r;
    }
    if let Some(r) = range_flag(a.mag_range, MagRange::from_gauss, "mag-range")? {
        m.mag_range = r;
    }
    if let Some(r) = range_flag(a.baro_resolution, BaroResolution::from_mbar, "baro-resolution")? {
        m.baro.resolution = r;
    }
    if let Some(sigma) = a.baro_noise {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(CliError::Usage("--baro-noise must be a non-negative number".into()));
        }
        m.baro.noise_sigma = sigma;
    }
    if let Some(rate) = a.rate {
        if !(rate > 1.0 && rate.is_finite()) {
            return Err(CliError::Usage("--rate must exceed 1 Hz".into()));
        }
        m.rate_hz = rate;
    }
    Ok(m)
}

fn stdout() -> BufWriter<io::StdoutLock<'static>> {
    BufWriter::new(io::stdout().lock())
}

fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    if a.list_scenarios {
        let mut out = stdout();
        for name in Scenario::names() {
            let s = scenario(name)?;
            writeln!(out, "{name}\t{}", s.description)?;
        }
        out.flush()?;
        return Ok(());
    }
    let name = a.scenario.as_deref().ok_or_else(|| CliError::Usage("--scenario is required".into()))?;
    let s = scenario(name)?;
    let model = error_model(&a, s.model)?;
    let truth = integrate_truth(&s.trajectory, model.rate_hz);
    let raw = synthesize(&truth, &model, a.seed);
    let trace_path = a.trace.clone().unwrap_or_else(|| a.out_dir.join(format!("{name}.trace.csv")));
    let truth_path = a.truth.clone().unwrap_or_else(|| a.out_dir.join(format!("{name}.truth.csv")));
    csvio::write_trace(csvio::create(&trace_path)?, &raw)?;
    csvio::write_truth(csvio::create(&truth_path)?, &truth)?;
    info!("{} samples → {}, {}", raw.len(), trace_path.display(), truth_path.display());
    Ok(())
}

fn read_calibration(path: &Path) -> Result<CalibrationParams, CliError> {
    let text = fs::read_to_string(path).map_err(data(&path.display().to_string()))?;
    text.parse().map_err(data(&path.display().to_string()))
}

fn load_trace(path: &Path) -> Result<csvio::Trace, CliError> {
    let trace = csvio::read_trace(csvio::open(path)?).map_err(data(&path.display().to_string()))?;
    if trace.samples.is_empty() {
        return Err(CliError::Data(format!("{}: trace has no samples", path.display())));
    }
    Ok(trace)
}

/// Pipeline settings for a trace, switching to 6-DOF when it has no
/// magnetometer columns.
fn trace_config(filter: &FilterArgs, trace: &csvio::Trace, path: &Path) -> Result<PipelineConfig, CliError> {
    let mut config = filter.pipeline_config()?;
    if !trace.has_mag && config.use_mag {
        warn!("{}: no magnetometer columns, fusing in 6-DOF mode (heading will drift)", path.display());
        config.use_mag = false;
    }
    if let [a, b, ..] = trace.samples[..] {
        config.nominal_dt = b.t - a.t;
    }
    Ok(config)
}

fn fuse_samples(config: PipelineConfig, trace: &csvio::Trace) -> Result<Vec<crate::sim::Estimate>, CliError> {
    let mut pipeline = Pipeline::new(config).map_err(|e| CliError::Usage(e.to_string()))?;
    trace
        .samples
        .iter()
        .map(|s| pipeline.push(s).map_err(|e| CliError::Data(e.to_string())))
        .collect()
}

fn fuse(a: FuseArgs) -> Result<(), CliError> {
    let trace = load_trace(&a.trace)?;
    let mut config = trace_config(&a.filter, &trace, &a.trace)?;
    if a.tare {
        config.reference_pressure = config.calibration.apply(&trace.samples[0]).pressure;
    }
    let estimates = fuse_samples(config, &trace)?;
    match &a.out {
        Some(path) => csvio::write_estimates(csvio::create(path)?, &estimates)?,
        None => csvio::write_estimates(stdout(), &estimates)?,
    }
    Ok(())
}

fn calibrate(a: CalibrateArgs) -> Result<(), CliError> {
    let trace = load_trace(&a.trace)?;
    if !trace.has_mag {
        return Err(CliError::Data(format!("{}: calibration needs magnetometer columns", a.trace.display())));
    }
    let mut session = CalibrationSession::default();
    for s in &trace.samples {
        session.step(s).map_err(data("calibration fit"))?;
        if session.phase() == Phase::Fitted {
            break;
        }
    }
    let report = match session.report() {
        Ok(r) => *r,
        Err(_) => {
            let detail = match session.phase() {
                Phase::CollectStationary => "never held still long enough to measure gyro bias".to_string(),
                Phase::CollectAccelPoses => format!(
                    "accelerometer poses cover {}/8 octants (need {MIN_OCTANTS}) or too few held samples",
                    session.accel_coverage()
                ),
                _ => format!(
                    "magnetometer rotations cover {}/8 octants (need {MIN_OCTANTS}) or too few samples",
                    session.mag_coverage()
                ),
            };
            return Err(CliError::Data(format!("insufficient calibration coverage: {detail}")));
        }
    };
    let params = session.params().map_err(data("calibration"))?;
    let summary = format!(
        "accel residual_rms = {:.6} g\nmag residual_rms = {:.6} gauss\ngyro bias = ({:.6}, {:.6}, {:.6}) rad/s\n",
        report.accel.residual_rms,
        report.mag.residual_rms,
        report.gyro_bias.x,
        report.gyro_bias.y,
        report.gyro_bias.z
    );
    match &a.out {
        Some(path) => {
            fs::write(path, params.to_string()).map_err(data(&path.display().to_string()))?;
            if a.report {
                print!("{summary}");
            }
        }
        None => {
            print!("{params}");
            if a.report {
                eprint!("{summary}");
            }
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    value: Option<f64>,
    limit: f64,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct EvaluationReport {
    metrics: Metrics,
    checks: Vec<Check>,
    pass: bool,
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<(), CliError> {
    let est = csvio::read_estimates(csvio::open(&a.estimates)?).map_err(data(&a.estimates.display().to_string()))?;
    let truth = csvio::read_truth(csvio::open(&a.truth)?).map_err(data(&a.truth.display().to_string()))?;
    let metrics = match (a.from, a.to) {
        (None, None) => evaluate(&est, &truth),
        (from, to) => evaluate_window(&est, &truth, from.unwrap_or(f64::NEG_INFINITY), to.unwrap_or(f64::INFINITY)),
    }
    .map_err(|e| CliError::Data(e.to_string()))?;

    let checks: Vec<Check> = [
        ("attitude_rms_deg", Some(metrics.attitude_rms.to_degrees()), a.max_attitude_rms),
        ("attitude_max_deg", Some(metrics.attitude_max.to_degrees()), a.max_attitude_error),
        ("altitude_rmse_m", metrics.altitude_rmse, a.max_altitude_rmse),
        ("convergence_time_s", metrics.convergence_time, a.max_convergence_time),
    ]
    .into_iter()
    .filter_map(|(name, value, limit)| {
        limit.map(|limit| Check { name, value, limit, pass: value.is_some_and(|v| v <= limit) })
    })
    .collect();
    let pass = checks.iter().all(|c| c.pass);
    let report = EvaluationReport { metrics, checks, pass };

    let mut out = stdout();
    match a.format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &report).map_err(|e| CliError::Data(e.to_string()))?;
            writeln!(out)?;
        }
        ReportFormat::Text => {
            let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
            writeln!(out, "samples            {}", metrics.samples)?;
            writeln!(out, "attitude_rms_deg   {:.6}", metrics.attitude_rms.to_degrees())?;
            writeln!(out, "attitude_max_deg   {:.6}", metrics.attitude_max.to_degrees())?;
            writeln!(out, "altitude_rmse_m    {}", opt(metrics.altitude_rmse))?;
            writeln!(out, "convergence_time_s {}", opt(metrics.convergence_time))?;
            for c in &report.checks {
                let verdict = if c.pass { "PASS" } else { "FAIL" };
                writeln!(out, "{verdict} {} = {} (limit {})", c.name, opt(c.value), c.limit)?;
            }
        }
    }
    out.flush()?;
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Threshold("evaluation thresholds not met".into()))
    }
}

fn serve(a: ServeArgs) -> Result<(), CliError> {
    if !(a.rate > 1.0 && a.rate.is_finite()) {
        return Err(CliError::Usage("--rate must exceed 1 Hz".into()));
    }
    let pipeline = a.filter.pipeline_config()?;
    let (source, rate): (SharedSource, f64) = match (&a.scenario, &a.trace) {
        (Some(name), _) => {
            let s = scenario(name)?;
            let model = SensorErrorModel { rate_hz: a.rate, ..s.model };
            let raw = synthesize(&integrate_truth(&s.trajectory, a.rate), &model, a.seed);
            (Arc::new(Mutex::new(LoopingSource::new(raw))), a.rate)
        }
        (None, Some(path)) => {
            let trace = load_trace(path)?;
            let rate = match trace.samples[..] {
                [x, y, ..] => 1.0 / (y.t - x.t),
                _ => a.rate,
            };
            (Arc::new(Mutex::new(LoopingSource::new(trace.samples))), rate)
        }
        (None, None) => (Arc::new(Mutex::new(StationarySource::new(a.rate))), a.rate),
    };
    let server = Server::bind(a.listen.as_str(), DeviceConfig { pipeline, rate }, source)
        .map_err(|e| CliError::Data(format!("cannot listen on {}: {e}", a.listen)))?;
    let addr = server.local_addr()?;
    let stop = server.shutdown_handle();
    ctrlc::set_handler(move || stop.store(true, Ordering::SeqCst))
        .map_err(|e| CliError::Data(format!("cannot install interrupt handler: {e}")))?;
    println!("listening on {addr}");
    io::stdout().flush()?;
    server.run()?;
    info!("shut down");
    Ok(())
}

fn mouse(a: MouseArgs) -> Result<(), CliError> {
    if !(a.deadzone >= 0.0 && a.gain.is_finite()) {
        return Err(CliError::Usage("--deadzone must be non-negative and --gain finite".into()));
    }
    let est = csvio::read_estimates(csvio::open(&a.estimates)?).map_err(data(&a.estimates.display().to_string()))?;
    let mut out = stdout();
    writeln!(out, "t,dx,dy")?;
    for e in &est {
        let [_, pitch, roll] = e.q.to_euler().to_degrees();
        let (dx, dy) = mouse_delta(roll, pitch, a.gain, a.deadzone);
        writeln!(out, "{},{dx},{dy}", e.t)?;
    }
    out.flush()?;
    Ok(())
}

fn taps(a: TapsArgs) -> Result<(), CliError> {
    let config = TapConfig {
        threshold: a.threshold,
        max_pulse_width: a.max_pulse_width,
        double_tap_window: a.double_tap_window,
        dead_time: a.dead_time,
        ..Default::default()
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let trace = load_trace(&a.trace)?;
    let pipeline = trace_config(&a.filter, &trace, &a.trace)?;
    let attitudes: Vec<_> = match &a.estimates {
        Some(path) => {
            let est = csvio::read_estimates(csvio::open(path)?).map_err(data(&path.display().to_string()))?;
            if est.len() != trace.samples.len() {
                return Err(CliError::Data(format!(
                    "{} has {} rows but the trace has {}",
                    path.display(),
                    est.len(),
                    trace.samples.len()
                )));
            }
            est.iter().map(|e| e.q).collect()
        }
        None => fuse_samples(pipeline, &trace)?.iter().map(|e| e.q).collect(),
    };
    let calibrated: Vec<_> = trace.samples.iter().map(|s| pipeline.calibration.apply(s)).collect();
    let events = detect_taps(&calibrated, &attitudes, &config).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut out = stdout();
    writeln!(out, "t,kind,axis,sign,magnitude")?;
    for e in &events {
        writeln!(out, "{}", e.csv_line())?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mouse_examples() {
        assert_eq!(mouse_delta(0.0, 0.0, 2.0, 1.0), (0, 0));
        assert_eq!(mouse_delta(10.0, 0.0, 2.0, 1.0), (20, 0));
        assert_eq!(mouse_delta(0.5, -0.5, 2.0, 1.0), (0, 0));
        assert_eq!(mouse_delta(-3.3, 1.26, 2.0, 1.0), (-7, 3));
    }

    #[test]
    fn config_expansion_puts_file_flags_before_command_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        fs::write(&path, "# filter settings\nkp = 1.5\nwarm_start = true\nno_mag = false\n").unwrap();
        let args: Vec<OsString> =
            ["marg", "--config", path.to_str().unwrap(), "fuse", "--trace", "x.csv", "--kp", "2"]
                .iter()
                .map(OsString::from)
                .collect();
        let expanded = expand_config(args).unwrap();
        let words: Vec<String> = expanded.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(words, ["marg", "fuse", "--kp", "1.5", "--warm-start", "--trace", "x.csv", "--kp", "2"]);
        let Command::Fuse(f) = Cli::try_parse_from(expanded).unwrap().command else { panic!() };
        assert_eq!(f.filter.kp, 2.0);
        assert!(f.filter.warm_start);
    }

    #[test]
    fn usage_errors_exit_one() {
        let code = main_with_args(["marg", "simulate", "--scenario", "no-such"].iter().map(OsString::from).collect());
        assert_eq!(code, EXIT_USAGE);
        let code = main_with_args(["marg", "frobnicate"].iter().map(OsString::from).collect());
        assert_eq!(code, EXIT_USAGE);
    }
}
