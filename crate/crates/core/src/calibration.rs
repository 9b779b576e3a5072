//! Sensor calibration: axis-aligned ellipsoid fits for the accelerometer and
//! magnetometer, stationary-window gyro bias, and the guided collection
//! session that drives them.
//!
//! Calibrated readings are `(raw − offset) ⊙ scale` for accel and mag, and
//! `raw − bias` for the gyro.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ahrs::MargSample;
use crate::math::Vec3;
use crate::sample::RawSample;

pub const DEFAULT_MIN_FIT_SAMPLES: usize = 100;
pub const MIN_OCTANTS: usize = 6;
pub const MAX_CONDITION: f64 = 1e10;
pub const MIN_GYRO_SAMPLES: usize = 200;
pub const DEFAULT_STILLNESS_THRESHOLD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("coverage gate failed: samples occupy {occupied} of 8 octants, need {needed}")]
    Coverage { occupied: usize, needed: usize },
    #[error("degenerate fit: {0}")]
    Degenerate(String),
    #[error("device not stationary: gyro standard deviation {std:?} rad/s exceeds {threshold} rad/s")]
    NotStationary { std: [f64; 3], threshold: f64 },
    #[error("not fitted")]
    NotFitted,
    #[error("calibration parameter `{0}` must be finite (scales strictly positive)")]
    InvalidParameter(&'static str),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Per-axis corrections for the three inertial sensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationParams {
    pub accel_offset: Vec3,
    pub accel_scale: Vec3,
    pub mag_offset: Vec3,
    pub mag_scale: Vec3,
    pub gyro_bias: Vec3,
}

impl Default for CalibrationParams {
    fn default() -> Self {
        Self::IDENTITY
    }
}

const FILE_KEYS: [&str; 5] = ["accel_offset", "accel_scale", "mag_offset", "mag_scale", "gyro_bias"];

impl CalibrationParams {
    pub const IDENTITY: CalibrationParams = CalibrationParams {
        accel_offset: Vec3::ZERO,
        accel_scale: Vec3::splat(1.0),
        mag_offset: Vec3::ZERO,
        mag_scale: Vec3::splat(1.0),
        gyro_bias: Vec3::ZERO,
    };

    pub fn validate(&self) -> Result<(), CalibrationError> {
        for (name, v) in FILE_KEYS.iter().zip(self.fields()) {
            if !v.is_finite() {
                return Err(CalibrationError::InvalidParameter(name));
            }
        }
        for (name, s) in [("accel_scale", self.accel_scale), ("mag_scale", self.mag_scale)] {
            if s.to_array().iter().any(|&c| c <= 0.0) {
                return Err(CalibrationError::InvalidParameter(name));
            }
        }
        Ok(())
    }

    fn fields(&self) -> [Vec3; 5] {
        [self.accel_offset, self.accel_scale, self.mag_offset, self.mag_scale, self.gyro_bias]
    }

    fn field_mut(&mut self, key: &str) -> Option<&mut Vec3> {
        match key {
            "accel_offset" => Some(&mut self.accel_offset),
            "accel_scale" => Some(&mut self.accel_scale),
            "mag_offset" => Some(&mut self.mag_offset),
            "mag_scale" => Some(&mut self.mag_scale),
            "gyro_bias" => Some(&mut self.gyro_bias),
            _ => None,
        }
    }

    pub fn apply(&self, raw: &RawSample) -> RawSample {
        RawSample {
            t: raw.t,
            gyro: raw.gyro - self.gyro_bias,
            accel: (raw.accel - self.accel_offset).hadamard(self.accel_scale),
            mag: (raw.mag - self.mag_offset).hadamard(self.mag_scale),
            pressure: raw.pressure,
        }
    }

    /// Inverse of [`CalibrationParams::apply`]: what a sensor with these
    /// errors would report for the true reading.
    pub fn distort(&self, truth: &RawSample) -> RawSample {
        RawSample {
            t: truth.t,
            gyro: truth.gyro + self.gyro_bias,
            accel: truth.accel.hadamard_div(self.accel_scale) + self.accel_offset,
            mag: truth.mag.hadamard_div(self.mag_scale) + self.mag_offset,
            pressure: truth.pressure,
        }
    }
}

/// Calibrated inertial sample for the attitude filter.
pub fn apply_calibration(raw: &RawSample, params: &CalibrationParams, dt: f64) -> MargSample {
    params.apply(raw).to_marg(dt, true)
}

impl fmt::Display for CalibrationParams {
    /// Flat `key = value` lines, 17 significant digits so values round-trip.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (key, v) in FILE_KEYS.iter().zip(self.fields()) {
            for (axis, c) in ["x", "y", "z"].iter().zip(v.to_array()) {
                writeln!(f, "{key}_{axis} = {c:.16e}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for CalibrationParams {
    type Err = CalibrationError;

    /// Parses the calibration file. Blank lines and `#` comments are
    /// skipped; every key must appear exactly once and unknown keys are
    /// rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut params = CalibrationParams::IDENTITY;
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (idx, raw_line) in s.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| CalibrationError::Parse { line: line_no, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| err(format!("bad value for `{key}`: {e}")))?;
            let (field, axis) = key
                .rsplit_once('_')
                .ok_or_else(|| err(format!("unknown key `{key}`")))?;
            let axis = match axis {
                "x" => 0,
                "y" => 1,
                "z" => 2,
                _ => return Err(err(format!("unknown key `{key}`"))),
            };
            let target = params.field_mut(field).ok_or_else(|| err(format!("unknown key `{key}`")))?;
            match axis {
                0 => target.x = value,
                1 => target.y = value,
                _ => target.z = value,
            }
            if let Some(prev) = seen.insert(key.to_string(), line_no) {
                return Err(err(format!("duplicate key `{key}` (first on line {prev})")));
            }
        }
        for key in FILE_KEYS {
            for axis in ["x", "y", "z"] {
                let full = format!("{key}_{axis}");
                if !seen.contains_key(&full) {
                    return Err(CalibrationError::Parse {
                        line: s.lines().count(),
                        message: format!("missing key `{full}`"),
                    });
                }
            }
        }
        params.validate()?;
        Ok(params)
    }
}

/// Result of an ellipsoid fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipsoidFit {
    pub offset: Vec3,
    pub scale: Vec3,
    /// RMS radial residual of the corrected samples, in input units.
    pub residual_rms: f64,
    /// Radius of the corrected sphere (geometric mean of the semi-axes).
    pub radius: f64,
}

/// Octants (by sign pattern of `s − center`) holding at least `min_per_octant`
/// of the samples farther than `min_radius` from `center`.
pub fn octant_occupancy(samples: &[Vec3], center: Vec3, min_radius: f64, min_per_octant: usize) -> usize {
    let mut counts = [0usize; 8];
    for s in samples {
        let d = *s - center;
        if d.norm() < min_radius {
            continue;
        }
        let idx = (d.x >= 0.0) as usize | ((d.y >= 0.0) as usize) << 1 | ((d.z >= 0.0) as usize) << 2;
        counts[idx] += 1;
    }
    counts.iter().filter(|&&c| c >= min_per_octant.max(1)).count()
}

/// Least-squares fit of `a·x² + b·y² + c·z² + d·x + e·y + f·z = 1`.
///
/// Returns the center `(−d/2a, −e/2b, −f/2c)` as offset and per-axis scales
/// mapping the semi-axes onto their geometric mean.
pub fn fit_ellipsoid(samples: &[Vec3], min_count: usize) -> Result<EllipsoidFit, CalibrationError> {
    if samples.len() < min_count.max(6) {
        return Err(CalibrationError::InsufficientSamples { needed: min_count.max(6), got: samples.len() });
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(CalibrationError::Degenerate("non-finite sample".into()));
    }
    // work in units of the largest component so the normal matrix is O(1)
    let unit = samples
        .iter()
        .flat_map(|s| s.to_array())
        .fold(0.0f64, |m, c| m.max(c.abs()));
    if unit == 0.0 {
        return Err(CalibrationError::Degenerate("all samples are zero".into()));
    }
    let mut normal = [[0.0; 6]; 6];
    let mut rhs = [0.0; 6];
    for s in samples {
        let p = *s / unit;
        let phi = [p.x * p.x, p.y * p.y, p.z * p.z, p.x, p.y, p.z];
        for i in 0..6 {
            rhs[i] += phi[i];
            for j in 0..6 {
                normal[i][j] += phi[i] * phi[j];
            }
        }
    }
    let inverse = invert(&normal).ok_or_else(|| CalibrationError::Degenerate("singular normal matrix".into()))?;
    let cond = norm1(&normal) * norm1(&inverse);
    if !(cond <= MAX_CONDITION) {
        return Err(CalibrationError::Degenerate(format!("condition number {cond:.3e} exceeds {MAX_CONDITION:e}")));
    }
    let mut coef = [0.0; 6];
    for (i, c) in coef.iter_mut().enumerate() {
        *c = (0..6).map(|j| inverse[i][j] * rhs[j]).sum();
    }
    let [a, b, c, d, e, f] = coef;
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(CalibrationError::Degenerate("quadric is not an ellipsoid".into()));
    }
    let center = Vec3::new(-d / (2.0 * a), -e / (2.0 * b), -f / (2.0 * c));
    let g = 1.0 + a * center.x * center.x + b * center.y * center.y + c * center.z * center.z;
    let semi = Vec3::new((g / a).sqrt(), (g / b).sqrt(), (g / c).sqrt()) * unit;
    let offset = center * unit;
    let radius = (semi.x * semi.y * semi.z).cbrt();
    let scale = Vec3::splat(radius).hadamard_div(semi);

    let occupied = octant_occupancy(samples, offset, 0.0, 1);
    if occupied < MIN_OCTANTS {
        return Err(CalibrationError::Coverage { occupied, needed: MIN_OCTANTS });
    }

    let sum_sq: f64 = samples
        .iter()
        .map(|s| {
            let r = (*s - offset).hadamard(scale).norm() - radius;
            r * r
        })
        .sum();
    let residual_rms = (sum_sq / samples.len() as f64).sqrt();
    Ok(EllipsoidFit { offset, scale, residual_rms, radius })
}

fn norm1(m: &[[f64; 6]; 6]) -> f64 {
    (0..6).map(|j| (0..6).map(|i| m[i][j].abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Gauss-Jordan inversion with partial pivoting.
fn invert(m: &[[f64; 6]; 6]) -> Option<[[f64; 6]; 6]> {
    let mut a = *m;
    let mut inv = [[0.0; 6]; 6];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..6 {
        let pivot = (col..6).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 || !a[pivot][col].is_finite() {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for k in 0..6 {
            a[col][k] /= p;
            inv[col][k] /= p;
        }
        for row in 0..6 {
            if row != col {
                let factor = a[row][col];
                if factor != 0.0 {
                    for k in 0..6 {
                        a[row][k] -= factor * a[col][k];
                        inv[row][k] -= factor * inv[col][k];
                    }
                }
            }
        }
    }
    Some(inv)
}

fn mean_and_std(samples: &[Vec3]) -> (Vec3, Vec3) {
    let n = samples.len() as f64;
    let mean = samples.iter().fold(Vec3::ZERO, |acc, s| acc + *s) / n;
    let var = samples.iter().fold(Vec3::ZERO, |acc, s| {
        let d = *s - mean;
        acc + d.hadamard(d)
    }) / n;
    (mean, var.map(f64::sqrt))
}

/// Gyro bias as the mean of a window verified to be stationary: every axis
/// must have a standard deviation below `stillness_threshold` rad/s.
pub fn gyro_bias_estimate(samples: &[Vec3], stillness_threshold: f64) -> Result<Vec3, CalibrationError> {
    if samples.len() < MIN_GYRO_SAMPLES {
        return Err(CalibrationError::InsufficientSamples { needed: MIN_GYRO_SAMPLES, got: samples.len() });
    }
    let (mean, std) = mean_and_std(samples);
    if std.to_array().iter().any(|&s| !(s < stillness_threshold)) {
        return Err(CalibrationError::NotStationary { std: std.to_array(), threshold: stillness_threshold });
    }
    Ok(mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    CollectStationary,
    CollectAccelPoses,
    CollectMagRotations,
    Fitted,
}

/// Instruction for the operator after each session step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prompt {
    HoldStill,
    NewPose { octants: usize, samples: usize },
    RotateSlowly { octants: usize, samples: usize },
    Done,
}

impl fmt::Display for Prompt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prompt::HoldStill => write!(f, "hold still"),
            Prompt::NewPose { octants, samples } => write!(
                f,
                "place the device in a new orientation and hold it still ({octants}/8 octants, {samples} samples)"
            ),
            Prompt::RotateSlowly { octants, samples } => write!(
                f,
                "rotate slowly about each axis ({octants}/8 octants, {samples} samples)"
            ),
            Prompt::Done => write!(f, "calibration complete"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub stationary_samples: usize,
    pub stillness_threshold: f64,
    /// Bias-corrected gyro norm below which an accelerometer sample counts
    /// as a held pose, rad/s.
    pub pose_motion_threshold: f64,
    pub accel_samples: usize,
    pub mag_samples: usize,
    /// Samples closer to the running centroid than this fraction of the mean
    /// sample norm do not count toward octant coverage.
    pub coverage_radius_fraction: f64,
    pub min_per_octant: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            stationary_samples: MIN_GYRO_SAMPLES,
            stillness_threshold: DEFAULT_STILLNESS_THRESHOLD,
            pose_motion_threshold: 0.05,
            accel_samples: 3000,
            mag_samples: 3000,
            coverage_radius_fraction: 0.25,
            min_per_octant: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationReport {
    pub accel: EllipsoidFit,
    pub mag: EllipsoidFit,
    pub gyro_bias: Vec3,
}

/// Guided calibration: hold still, then a series of held poses, then slow
/// rotations. Phases only move forward.
///
/// Accelerometer samples are only kept while the gyro says the board is
/// held still. Magnetometer samples are kept from the first pose onward,
/// since the field is the same whether the board moves or not.
#[derive(Debug, Clone)]
pub struct CalibrationSession {
    config: SessionConfig,
    phase: Phase,
    gyro_window: VecDeque<Vec3>,
    gyro_bias: Vec3,
    accel: Vec<Vec3>,
    mag: Vec<Vec3>,
    report: Option<CalibrationReport>,
}

impl Default for CalibrationSession {
    fn default() -> Self {
        Self::new(SessionConfig::default())
    }
}

impl CalibrationSession {
    pub fn new(config: SessionConfig) -> Self {
        Self {
            config,
            phase: Phase::CollectStationary,
            gyro_window: VecDeque::with_capacity(config.stationary_samples),
            gyro_bias: Vec3::ZERO,
            accel: Vec::new(),
            mag: Vec::new(),
            report: None,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Octants covered by `samples` around their own centroid.
    fn coverage(&self, samples: &[Vec3]) -> usize {
        if samples.is_empty() {
            return 0;
        }
        let n = samples.len() as f64;
        let centroid = samples.iter().fold(Vec3::ZERO, |a, s| a + *s) / n;
        let mean_norm = samples.iter().map(|s| s.norm()).sum::<f64>() / n;
        octant_occupancy(
            samples,
            centroid,
            self.config.coverage_radius_fraction * mean_norm,
            self.config.min_per_octant,
        )
    }

    pub fn accel_coverage(&self) -> usize {
        self.coverage(&self.accel)
    }

    pub fn mag_coverage(&self) -> usize {
        self.coverage(&self.mag)
    }

    /// Feeds one raw sample and returns what the operator should do next.
    pub fn step(&mut self, sample: &RawSample) -> Result<Prompt, CalibrationError> {
        match self.phase {
            Phase::CollectStationary => {
                if self.gyro_window.len() == self.config.stationary_samples {
                    self.gyro_window.pop_front();
                }
                self.gyro_window.push_back(sample.gyro);
                if self.gyro_window.len() < self.config.stationary_samples {
                    return Ok(Prompt::HoldStill);
                }
                let window: Vec<Vec3> = self.gyro_window.iter().copied().collect();
                match gyro_bias_estimate(&window, self.config.stillness_threshold) {
                    Ok(bias) => {
                        self.gyro_bias = bias;
                        self.phase = Phase::CollectAccelPoses;
                        Ok(Prompt::NewPose { octants: 0, samples: 0 })
                    }
                    Err(CalibrationError::NotStationary { .. }) => Ok(Prompt::HoldStill),
                    Err(e) => Err(e),
                }
            }
            Phase::CollectAccelPoses => {
                if (sample.gyro - self.gyro_bias).norm() < self.config.pose_motion_threshold {
                    self.accel.push(sample.accel);
                }
                self.mag.push(sample.mag);
                let octants = self.accel_coverage();
                // coverage is enforced by the fit once the rotations are done
                if self.accel.len() >= self.config.accel_samples {
                    self.phase = Phase::CollectMagRotations;
                    return Ok(Prompt::RotateSlowly { octants: self.mag_coverage(), samples: self.mag.len() });
                }
                Ok(Prompt::NewPose { octants, samples: self.accel.len() })
            }
            Phase::CollectMagRotations => {
                self.mag.push(sample.mag);
                let octants = self.mag_coverage();
                if self.mag.len() >= self.config.mag_samples && octants >= MIN_OCTANTS {
                    let accel = fit_ellipsoid(&self.accel, DEFAULT_MIN_FIT_SAMPLES)?;
                    let mag = fit_ellipsoid(&self.mag, DEFAULT_MIN_FIT_SAMPLES)?;
                    self.report = Some(CalibrationReport { accel, mag, gyro_bias: self.gyro_bias });
                    self.phase = Phase::Fitted;
                    return Ok(Prompt::Done);
                }
                Ok(Prompt::RotateSlowly { octants, samples: self.mag.len() })
            }
            Phase::Fitted => Ok(Prompt::Done),
        }
    }

    pub fn report(&self) -> Result<&CalibrationReport, CalibrationError> {
        self.report.as_ref().ok_or(CalibrationError::NotFitted)
    }

    pub fn params(&self) -> Result<CalibrationParams, CalibrationError> {
        let r = self.report()?;
        Ok(CalibrationParams {
            accel_offset: r.accel.offset,
            // the accelerometer sphere has a known radius of 1 g
            accel_scale: r.accel.scale / r.accel.radius,
            mag_offset: r.mag.offset,
            mag_scale: r.mag.scale,
            gyro_bias: r.gyro_bias,
        })
    }
}
