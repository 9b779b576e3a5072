//! Tap detection and planar displacement from fused motion data.

use core::f64::consts::PI;
use core::fmt;

use thiserror::Error;

use crate::math::{Quaternion, Vec3};
use crate::sample::RawSample;
use crate::vertical::gravity_compensate;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TapConfigError {
    #[error("threshold must exceed 1 g (got {0})")]
    Threshold(f64),
    #[error("{0} must be positive")]
    Window(&'static str),
    #[error("dead_time must be shorter than double_tap_window")]
    DeadTime,
}

/// Tap detector settings. Times in seconds, accelerations in g.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapConfig {
    pub threshold: f64,
    pub max_pulse_width: f64,
    pub double_tap_window: f64,
    pub dead_time: f64,
    /// Cutoff of the high-pass applied before thresholding, Hz.
    pub highpass_cutoff: f64,
}

impl Default for TapConfig {
    fn default() -> Self {
        Self { threshold: 2.5, max_pulse_width: 0.05, double_tap_window: 0.4, dead_time: 0.1, highpass_cutoff: 1.0 }
    }
}

impl TapConfig {
    pub fn validate(&self) -> Result<(), TapConfigError> {
        if !(self.threshold > 1.0) {
            return Err(TapConfigError::Threshold(self.threshold));
        }
        for (name, v) in [
            ("max_pulse_width", self.max_pulse_width),
            ("double_tap_window", self.double_tap_window),
            ("dead_time", self.dead_time),
            ("highpass_cutoff", self.highpass_cutoff),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TapConfigError::Window(name));
            }
        }
        if self.dead_time >= self.double_tap_window {
            return Err(TapConfigError::DeadTime);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TapKind {
    Single,
    Double,
}

impl fmt::Display for TapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TapKind::Single => "single",
            TapKind::Double => "double",
        })
    }
}

/// A detected tap. `t` is the time of the (first) pulse peak; `magnitude`
/// is the peak gravity-compensated acceleration on `axis`, in g. For a
/// double tap it is the larger of the two peaks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TapEvent {
    pub t: f64,
    pub kind: TapKind,
    pub axis: Axis,
    /// +1 or −1
    pub sign: i8,
    pub magnitude: f64,
}

impl TapEvent {
    /// `t,kind,axis,sign,magnitude`
    pub fn csv_line(&self) -> String {
        let sign = if self.sign > 0 { '+' } else { '-' };
        format!("{},{},{},{},{}", self.t, self.kind, self.axis, sign, self.magnitude)
    }
}

#[derive(Debug, Clone, Copy)]
struct Pulse {
    start: f64,
    /// axes whose filtered value crossed the threshold
    axes: [bool; 3],
    peak_t: f64,
    peak: Vec3,
    too_wide: bool,
}

#[derive(Debug, Clone, Copy)]
struct Tap {
    t: f64,
    axis: Axis,
    sign: i8,
    magnitude: f64,
}

/// Streaming tap detector.
///
/// Body-frame acceleration has gravity removed using the supplied attitude,
/// then passes a first-order high-pass. A pulse is a run of samples where
/// some axis of the filtered signal exceeds the threshold; it counts as a
/// tap when it is no wider than `max_pulse_width` and only one axis crossed.
///
/// A single tap is reported only once `double_tap_window` has passed with
/// no second tap, so singles arrive with that much latency. Pulses within
/// `dead_time` of a tap are treated as ringing and ignored.
#[derive(Debug, Clone)]
pub struct TapDetector {
    config: TapConfig,
    prev_t: Option<f64>,
    prev_input: Vec3,
    filtered: Vec3,
    pulse: Option<Pulse>,
    pending: Option<Tap>,
    quiet_until: f64,
}

impl TapDetector {
    pub fn new(config: TapConfig) -> Result<Self, TapConfigError> {
        config.validate()?;
        Ok(Self {
            config,
            prev_t: None,
            prev_input: Vec3::ZERO,
            filtered: Vec3::ZERO,
            pulse: None,
            pending: None,
            quiet_until: f64::NEG_INFINITY,
        })
    }

    pub fn config(&self) -> &TapConfig {
        &self.config
    }

    /// Feeds one sample: time (s), body acceleration (g), attitude.
    pub fn push(&mut self, t: f64, accel: Vec3, attitude: Quaternion) -> Option<TapEvent> {
        let input = accel - attitude.rotate_inverse(Vec3::new(0.0, 0.0, 1.0));
        match self.prev_t {
            None => self.filtered = Vec3::ZERO,
            Some(prev) => {
                let dt = (t - prev).max(0.0);
                let rc = 1.0 / (2.0 * PI * self.config.highpass_cutoff);
                let alpha = rc / (rc + dt);
                self.filtered = (self.filtered + input - self.prev_input) * alpha;
            }
        }
        self.prev_t = Some(t);
        self.prev_input = input;

        let mut emitted = self.expire_pending(t);

        let th = self.config.threshold;
        let above = [0, 1, 2].map(|i| self.filtered.axis(i).abs() > th);
        if above.iter().any(|&a| a) {
            let pulse = self.pulse.get_or_insert(Pulse {
                start: t,
                axes: [false; 3],
                peak_t: t,
                peak: input,
                too_wide: false,
            });
            for i in 0..3 {
                pulse.axes[i] |= above[i];
            }
            if max_abs(input) > max_abs(pulse.peak) {
                pulse.peak = input;
                pulse.peak_t = t;
            }
            if t - pulse.start > self.config.max_pulse_width {
                pulse.too_wide = true;
            }
        } else if let Some(pulse) = self.pulse.take() {
            if let Some(tap) = self.classify(&pulse, t) {
                if let Some(ev) = self.accept(tap) {
                    emitted = Some(ev);
                }
            }
        }
        emitted
    }

    /// Ends the stream, releasing a single tap still waiting on its
    /// double-tap window.
    pub fn finish(&mut self) -> Option<TapEvent> {
        self.pending.take().map(|tap| event(tap, TapKind::Single, tap.magnitude))
    }

    fn expire_pending(&mut self, t: f64) -> Option<TapEvent> {
        match self.pending {
            Some(tap) if t - tap.t > self.config.double_tap_window => {
                self.pending = None;
                Some(event(tap, TapKind::Single, tap.magnitude))
            }
            _ => None,
        }
    }

    fn classify(&self, pulse: &Pulse, end: f64) -> Option<Tap> {
        if pulse.too_wide || end - pulse.start > self.config.max_pulse_width + 1e-9 {
            return None;
        }
        if pulse.start < self.quiet_until {
            return None;
        }
        let crossed: Vec<usize> = (0..3).filter(|&i| pulse.axes[i]).collect();
        let [i] = crossed[..] else { return None };
        let value = pulse.peak.axis(i);
        let magnitude = value.abs();
        // the filter can overshoot the raw signal; never report below threshold
        if magnitude <= self.config.threshold {
            return None;
        }
        Some(Tap { t: pulse.peak_t, axis: Axis::ALL[i], sign: if value >= 0.0 { 1 } else { -1 }, magnitude })
    }

    fn accept(&mut self, tap: Tap) -> Option<TapEvent> {
        self.quiet_until = tap.t + self.config.dead_time;
        match self.pending.take() {
            Some(first) if tap.t - first.t <= self.config.double_tap_window => {
                Some(event(first, TapKind::Double, first.magnitude.max(tap.magnitude)))
            }
            Some(first) => {
                self.pending = Some(tap);
                Some(event(first, TapKind::Single, first.magnitude))
            }
            None => {
                self.pending = Some(tap);
                None
            }
        }
    }
}

fn max_abs(v: Vec3) -> f64 {
    v.x.abs().max(v.y.abs()).max(v.z.abs())
}

fn event(tap: Tap, kind: TapKind, magnitude: f64) -> TapEvent {
    TapEvent { t: tap.t, kind, axis: tap.axis, sign: tap.sign, magnitude }
}

/// Runs a detector over time-aligned sample and attitude streams.
pub fn detect_taps(samples: &[RawSample], attitudes: &[Quaternion], config: &TapConfig) -> Result<Vec<TapEvent>, TapConfigError> {
    let mut det = TapDetector::new(*config)?;
    let mut out: Vec<TapEvent> =
        samples.iter().zip(attitudes).filter_map(|(s, q)| det.push(s.t, s.accel, *q)).collect();
    out.extend(det.finish());
    Ok(out)
}

/// Dead reckoning by double integration is only usable over short spans:
/// sensor noise and attitude error integrate twice, so the position error
/// grows roughly with the square of elapsed time.
pub const DRIFT_CAVEAT: &str =
    "double-integrated displacement drifts: error grows roughly with elapsed time squared; trust it over seconds, not minutes";

/// One displacement output, with how long the integrator has been running.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Displacement {
    pub t: f64,
    /// NED, m, relative to the last reset
    pub position: Vec3,
    /// NED, m/s
    pub velocity: Vec3,
    /// s since the last reset
    pub elapsed: f64,
    pub caveat: &'static str,
}

/// Trapezoidal double integration of earth-frame linear acceleration,
/// starting at rest. See [`DRIFT_CAVEAT`].
#[derive(Debug, Clone, Default)]
pub struct PlanarIntegrator {
    start: Option<f64>,
    last: Option<(f64, Vec3)>,
    velocity: Vec3,
    position: Vec3,
}

impl PlanarIntegrator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Zero velocity and displacement; the next sample becomes the origin.
    pub fn reset(&mut self) {
        *self = Self::default();
    }

    /// Feeds body acceleration (g) with its attitude.
    pub fn push(&mut self, t: f64, accel: Vec3, attitude: Quaternion) -> Displacement {
        // gravity_compensate reports climb as +z; NED down is the opposite
        let a = -gravity_compensate(attitude, accel);
        self.push_earth(t, a)
    }

    /// Feeds an earth-frame (NED) linear acceleration in m/s².
    pub fn push_earth(&mut self, t: f64, a: Vec3) -> Displacement {
        let start = *self.start.get_or_insert(t);
        if let Some((t0, a0)) = self.last {
            let dt = t - t0;
            let v_new = self.velocity + (a0 + a) * (0.5 * dt);
            self.position += (self.velocity + v_new) * (0.5 * dt);
            self.velocity = v_new;
        }
        self.last = Some((t, a));
        Displacement { t, position: self.position, velocity: self.velocity, elapsed: t - start, caveat: DRIFT_CAVEAT }
    }
}

pub fn planar_displacement(samples: &[RawSample], attitudes: &[Quaternion]) -> Vec<Displacement> {
    let mut integ = PlanarIntegrator::new();
    samples.iter().zip(attitudes).map(|(s, q)| integ.push(s.t, s.accel, *q)).collect()
}
