//! Sensor error model and the synthesizer that turns ground truth into raw
//! board readings.
//!
//! Noise comes from a ChaCha8 generator seeded with the caller's `u64` and
//! standard normal draws (`rand_distr::StandardNormal`), taken in a fixed
//! order per tick: gyro x, y, z, accel x, y, z, mag x, y, z, pressure. Every
//! draw happens even when the corresponding σ is zero, so enabling one noise
//! source never reshuffles another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::math::Vec3;
use crate::sample::RawSample;
use crate::sim::trajectory::TruthSample;
use crate::vertical::{altitude_to_pressure, MAX_PRESSURE, MIN_PRESSURE, SEA_LEVEL_PRESSURE, STANDARD_GRAVITY};

/// Gyroscope full-scale settings, ±deg/s.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GyroRange {
    Dps250,
    Dps500,
    Dps1000,
    Dps2000,
}

impl GyroRange {
    pub const ALL: [GyroRange; 4] = [GyroRange::Dps250, GyroRange::Dps500, GyroRange::Dps1000, GyroRange::Dps2000];

    pub fn degrees_per_second(self) -> f64 {
        match self {
            GyroRange::Dps250 => 250.0,
            GyroRange::Dps500 => 500.0,
            GyroRange::Dps1000 => 1000.0,
            GyroRange::Dps2000 => 2000.0,
        }
    }

    pub fn rad_per_second(self) -> f64 {
        self.degrees_per_second().to_radians()
    }

    pub fn from_dps(v: f64) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.degrees_per_second() == v)
    }
}

/// Accelerometer full-scale settings, ±g.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccelRange {
    G2,
    G4,
    G8,
    G16,
}

impl AccelRange {
    pub const ALL: [AccelRange; 4] = [AccelRange::G2, AccelRange::G4, AccelRange::G8, AccelRange::G16];

    pub fn g(self) -> f64 {
        match self {
            AccelRange::G2 => 2.0,
            AccelRange::G4 => 4.0,
            AccelRange::G8 => 8.0,
            AccelRange::G16 => 16.0,
        }
    }

    pub fn from_g(v: f64) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.g() == v)
    }
}

/// Magnetometer full-scale settings, ±gauss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MagRange {
    Ga0_88,
    Ga1_3,
    Ga1_9,
    Ga2_5,
    Ga4_0,
    Ga4_7,
    Ga5_6,
    Ga8_1,
}

impl MagRange {
    pub const ALL: [MagRange; 8] = [
        MagRange::Ga0_88,
        MagRange::Ga1_3,
        MagRange::Ga1_9,
        MagRange::Ga2_5,
        MagRange::Ga4_0,
        MagRange::Ga4_7,
        MagRange::Ga5_6,
        MagRange::Ga8_1,
    ];

    pub fn gauss(self) -> f64 {
        match self {
            MagRange::Ga0_88 => 0.88,
            MagRange::Ga1_3 => 1.3,
            MagRange::Ga1_9 => 1.9,
            MagRange::Ga2_5 => 2.5,
            MagRange::Ga4_0 => 4.0,
            MagRange::Ga4_7 => 4.7,
            MagRange::Ga5_6 => 5.6,
            MagRange::Ga8_1 => 8.1,
        }
    }

    pub fn from_gauss(v: f64) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.gauss() == v)
    }
}

/// Barometer resolution (oversampling) settings, mbar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaroResolution {
    Mbar0_065,
    Mbar0_042,
    Mbar0_027,
    Mbar0_018,
    Mbar0_012,
}

impl BaroResolution {
    pub const ALL: [BaroResolution; 5] = [
        BaroResolution::Mbar0_065,
        BaroResolution::Mbar0_042,
        BaroResolution::Mbar0_027,
        BaroResolution::Mbar0_018,
        BaroResolution::Mbar0_012,
    ];

    pub fn mbar(self) -> f64 {
        match self {
            BaroResolution::Mbar0_065 => 0.065,
            BaroResolution::Mbar0_042 => 0.042,
            BaroResolution::Mbar0_027 => 0.027,
            BaroResolution::Mbar0_018 => 0.018,
            BaroResolution::Mbar0_012 => 0.012,
        }
    }

    pub fn from_mbar(v: f64) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.mbar() == v)
    }
}

/// Additive bias, multiplicative scale error and white noise for one
/// three-axis sensor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisErrors {
    pub bias: Vec3,
    /// reading = truth ⊙ (1 + scale) + bias + noise
    pub scale: Vec3,
    pub noise_sigma: f64,
}

impl AxisErrors {
    pub const NONE: AxisErrors = AxisErrors { bias: Vec3::ZERO, scale: Vec3::ZERO, noise_sigma: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaroErrors {
    /// mbar
    pub bias: f64,
    /// mbar
    pub noise_sigma: f64,
    pub resolution: BaroResolution,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorErrorModel {
    /// rad/s
    pub gyro: AxisErrors,
    pub gyro_range: GyroRange,
    /// g
    pub accel: AxisErrors,
    pub accel_range: AccelRange,
    /// gauss
    pub mag: AxisErrors,
    pub mag_range: MagRange,
    pub baro: BaroErrors,
    /// Earth magnetic flux, NED, gauss.
    pub earth_field: Vec3,
    /// Pressure at altitude zero, mbar.
    pub reference_pressure: f64,
    pub rate_hz: f64,
}

pub const DEFAULT_EARTH_FIELD: Vec3 = Vec3::new(0.2, 0.0, 0.4);

impl SensorErrorModel {
    /// Perfect sensors at the widest ranges and finest barometer resolution.
    pub fn ideal() -> Self {
        Self {
            gyro: AxisErrors::NONE,
            gyro_range: GyroRange::Dps2000,
            accel: AxisErrors::NONE,
            accel_range: AccelRange::G16,
            mag: AxisErrors::NONE,
            mag_range: MagRange::Ga8_1,
            baro: BaroErrors { bias: 0.0, noise_sigma: 0.0, resolution: BaroResolution::Mbar0_012 },
            earth_field: DEFAULT_EARTH_FIELD,
            reference_pressure: SEA_LEVEL_PRESSURE,
            rate_hz: 100.0,
        }
    }

    /// Datasheet-class errors for an uncalibrated 10-DOF board: biases of
    /// 0.02 rad/s, 0.03 g and 0.08 gauss (hard iron) per axis, percent-level
    /// accel/mag scale errors and white noise.
    pub fn realistic() -> Self {
        Self {
            gyro: AxisErrors { bias: Vec3::new(0.02, -0.02, 0.02), scale: Vec3::ZERO, noise_sigma: 0.001 },
            gyro_range: GyroRange::Dps2000,
            accel: AxisErrors {
                bias: Vec3::new(0.03, -0.03, 0.03),
                scale: Vec3::new(0.01, -0.01, 0.02),
                noise_sigma: 0.004,
            },
            accel_range: AccelRange::G8,
            mag: AxisErrors {
                bias: Vec3::new(0.08, -0.08, 0.08),
                scale: Vec3::new(0.03, -0.02, 0.01),
                noise_sigma: 0.002,
            },
            mag_range: MagRange::Ga1_3,
            baro: BaroErrors { bias: 0.0, noise_sigma: 0.012, resolution: BaroResolution::Mbar0_012 },
            earth_field: DEFAULT_EARTH_FIELD,
            reference_pressure: SEA_LEVEL_PRESSURE,
            rate_hz: 100.0,
        }
    }

    pub fn with_baro(mut self, resolution: BaroResolution, noise_sigma: f64) -> Self {
        self.baro.resolution = resolution;
        self.baro.noise_sigma = noise_sigma;
        self
    }

    pub fn with_rate(mut self, rate_hz: f64) -> Self {
        self.rate_hz = rate_hz;
        self
    }
}

fn normal3(rng: &mut ChaCha8Rng) -> Vec3 {
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    let z: f64 = StandardNormal.sample(rng);
    Vec3::new(x, y, z)
}

fn corrupt(truth: Vec3, e: &AxisErrors, noise: Vec3, limit: f64) -> Vec3 {
    let v = truth.hadamard(Vec3::splat(1.0) + e.scale) + e.bias + noise * e.noise_sigma;
    v.map(|c| c.clamp(-limit, limit))
}

fn quantize(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

/// Error-free sensor readings for one truth interval.
///
/// The gyro reports the constant rate that carries `prev.q` onto `cur.q`
/// and the accelerometer the mean acceleration over the interval, both as an
/// averaging sensor would. With no previous sample the supplied `rate0` and
/// `accel0` are used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealReading {
    pub gyro: Vec3,
    pub accel: Vec3,
    pub mag: Vec3,
    pub pressure: f64,
}

pub fn ideal_reading(prev: Option<&TruthSample>, cur: &TruthSample, earth_field: Vec3, p0: f64) -> IdealReading {
    let (rate, accel_ned) = match prev {
        Some(p) if cur.t > p.t => {
            let dt = cur.t - p.t;
            ((p.q.conjugate() * cur.q).to_rotation_vector() / dt, (cur.velocity - p.velocity) / dt)
        }
        _ => (Vec3::ZERO, Vec3::ZERO),
    };
    let gravity = Vec3::new(0.0, 0.0, STANDARD_GRAVITY);
    IdealReading {
        gyro: rate,
        accel: cur.q.rotate_inverse(gravity - accel_ned) / STANDARD_GRAVITY,
        mag: cur.q.rotate_inverse(earth_field),
        pressure: altitude_to_pressure(cur.altitude(), p0),
    }
}

/// Raw board readings for a truth stream. Deterministic in `seed`.
pub fn synthesize(truth: &[TruthSample], model: &SensorErrorModel, seed: u64) -> Vec<RawSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(truth.len());
    for (i, cur) in truth.iter().enumerate() {
        // the first tick has no interval; reuse the second one's rates
        let ideal = if i == 0 {
            let mut r = ideal_reading(None, cur, model.earth_field, model.reference_pressure);
            if let Some(next) = truth.get(1) {
                let n = ideal_reading(Some(cur), next, model.earth_field, model.reference_pressure);
                r.gyro = n.gyro;
                let gravity = Vec3::new(0.0, 0.0, STANDARD_GRAVITY);
                let accel_ned = (next.velocity - cur.velocity) / (next.t - cur.t);
                r.accel = cur.q.rotate_inverse(gravity - accel_ned) / STANDARD_GRAVITY;
            }
            r
        } else {
            ideal_reading(Some(&truth[i - 1]), cur, model.earth_field, model.reference_pressure)
        };
        let gyro = corrupt(ideal.gyro, &model.gyro, normal3(&mut rng), model.gyro_range.rad_per_second());
        let accel = corrupt(ideal.accel, &model.accel, normal3(&mut rng), model.accel_range.g());
        let mag = corrupt(ideal.mag, &model.mag, normal3(&mut rng), model.mag_range.gauss());
        let baro_noise: f64 = StandardNormal.sample(&mut rng);
        let pressure = quantize(ideal.pressure, model.baro.resolution.mbar())
            + model.baro.bias
            + baro_noise * model.baro.noise_sigma;
        out.push(RawSample {
            t: cur.t,
            gyro,
            accel,
            mag,
            pressure: pressure.clamp(MIN_PRESSURE, MAX_PRESSURE),
        });
    }
    out
}
