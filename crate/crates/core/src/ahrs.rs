//! Attitude estimation from gyroscope, accelerometer and (optionally)
//! magnetometer readings.
//!
//! Two filters share one state type:
//!
//! - **Mahony**: explicit complementary filter. The cross product between the
//!   measured and predicted reference directions is fed back into the gyro
//!   rate through a PI controller.
//! - **Madgwick**: one normalized gradient-descent step per sample on the
//!   measurement residual, subtracted from the gyro quaternion rate.
//!
//! Both apply the same magnetic distortion compensation: the measured flux is
//! rotated into the earth frame and its horizontal part collapsed onto north,
//! so a disturbed field can only pull on heading.
//!
//! The filters integrate with a first-order step followed by normalization,
//! so with all gains at zero both reduce to the same gyro integrator.

use thiserror::Error;

use crate::math::{EulerAngles, Quaternion, Vec3};

/// Readings below this norm are treated as absent for that step.
pub const MIN_REFERENCE_NORM: f64 = 1e-12;

/// Default per-axis clamp on the Mahony integral term, rad/s.
pub const DEFAULT_INTEGRAL_CLAMP: f64 = 0.5;

const EARTH_DOWN: Vec3 = Vec3::new(0.0, 0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("gain `{name}` must be finite and non-negative, got {value}")]
    InvalidGain { name: &'static str, value: f64 },
    #[error("sample period must satisfy 0 < dt < 1 s, got {0}")]
    InvalidDt(f64),
    #[error("sample contains non-finite values")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Algorithm {
    #[default]
    Mahony,
    Madgwick,
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mahony" => Ok(Algorithm::Mahony),
            "madgwick" => Ok(Algorithm::Madgwick),
            other => Err(format!("unknown filter `{other}` (expected mahony or madgwick)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub algorithm: Algorithm,
    /// Madgwick gradient step gain, rad/s.
    pub beta: f64,
    /// Mahony proportional gain.
    pub kp: f64,
    /// Mahony integral gain. Zero disables gyro bias estimation.
    pub ki: f64,
    /// Informational only: each sample carries its own `dt`.
    pub nominal_rate: f64,
    /// Per-axis bound on the Mahony integral term, rad/s.
    pub integral_clamp: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Mahony,
            beta: 0.1,
            kp: 0.5,
            ki: 0.0,
            nominal_rate: 100.0,
            integral_clamp: DEFAULT_INTEGRAL_CLAMP,
        }
    }
}

impl FilterConfig {
    pub fn mahony(kp: f64, ki: f64) -> Self {
        Self { algorithm: Algorithm::Mahony, kp, ki, ..Self::default() }
    }

    pub fn madgwick(beta: f64) -> Self {
        Self { algorithm: Algorithm::Madgwick, beta, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        for (name, value) in [
            ("beta", self.beta),
            ("kp", self.kp),
            ("ki", self.ki),
            ("integral_clamp", self.integral_clamp),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(FusionError::InvalidGain { name, value });
            }
        }
        Ok(())
    }
}

/// One calibrated inertial sample. `mag = None` selects 6-DOF operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MargSample {
    /// rad/s
    pub gyro: Vec3,
    /// g
    pub accel: Vec3,
    /// gauss
    pub mag: Option<Vec3>,
    /// Seconds since the previous sample.
    pub dt: f64,
}

impl MargSample {
    pub fn new(gyro: Vec3, accel: Vec3, mag: Option<Vec3>, dt: f64) -> Self {
        Self { gyro, accel, mag, dt }
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        if !(self.dt > 0.0 && self.dt < 1.0) {
            return Err(FusionError::InvalidDt(self.dt));
        }
        let mag_ok = self.mag.map_or(true, Vec3::is_finite);
        if !(self.gyro.is_finite() && self.accel.is_finite() && mag_ok) {
            return Err(FusionError::NonFinite);
        }
        Ok(())
    }
}

/// Filter state: attitude (body to earth), Mahony integral feedback and the
/// number of updates applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionState {
    pub q: Quaternion,
    /// Mahony integral term, rad/s. Converges to minus the gyro bias when
    /// `ki > 0`.
    pub integral_fb: Vec3,
    pub sample_count: u64,
}

impl FusionState {
    /// Identity attitude, zero integral term.
    pub fn new(config: &FilterConfig) -> Result<Self, FusionError> {
        config.validate()?;
        Ok(Self { q: Quaternion::IDENTITY, integral_fb: Vec3::ZERO, sample_count: 0 })
    }

    /// Starts from the attitude implied by a single accelerometer (and
    /// optional magnetometer) reading instead of identity.
    pub fn warm_start(
        config: &FilterConfig,
        accel: Vec3,
        mag: Option<Vec3>,
    ) -> Result<Self, FusionError> {
        let mut state = Self::new(config)?;
        state.q = attitude_from_references(accel, mag);
        Ok(state)
    }

    /// Applies one update using the magnetometer when the sample has one.
    pub fn update_marg(&self, sample: &MargSample, config: &FilterConfig) -> Result<Self, FusionError> {
        sample.validate()?;
        Ok(self.step(sample.gyro, sample.accel, sample.mag, sample.dt, config))
    }

    /// Applies one update ignoring any magnetometer reading. Heading is then
    /// unobservable and follows the integrated gyro.
    pub fn update_imu(&self, sample: &MargSample, config: &FilterConfig) -> Result<Self, FusionError> {
        sample.validate()?;
        Ok(self.step(sample.gyro, sample.accel, None, sample.dt, config))
    }

    fn step(&self, gyro: Vec3, accel: Vec3, mag: Option<Vec3>, dt: f64, config: &FilterConfig) -> Self {
        let accel = accel.normalized(MIN_REFERENCE_NORM);
        let mag = mag.and_then(|m| m.normalized(MIN_REFERENCE_NORM));
        let mut next = *self;
        let q_dot = match config.algorithm {
            Algorithm::Mahony => {
                let err = mahony_error(self.q, accel, mag);
                if config.ki > 0.0 {
                    let c = config.integral_clamp;
                    next.integral_fb = (self.integral_fb + err * (config.ki * dt)).map(|v| v.clamp(-c, c));
                } else {
                    next.integral_fb = Vec3::ZERO;
                }
                let rate = gyro + err * config.kp + next.integral_fb;
                (self.q * Quaternion::pure(rate)).scale(0.5)
            }
            Algorithm::Madgwick => {
                let mut q_dot = (self.q * Quaternion::pure(gyro)).scale(0.5);
                let grad = madgwick_gradient(self.q, accel, mag);
                let n = grad.norm();
                if n > f64::EPSILON * f64::EPSILON {
                    q_dot = q_dot - grad.scale(config.beta / n);
                }
                q_dot
            }
        };
        // A rotation increment of dt < 1 s cannot annihilate a unit quaternion.
        next.q = (self.q + q_dot.scale(dt)).normalize().unwrap_or(self.q);
        next.sample_count += 1;
        next
    }

    pub fn quaternion(&self) -> Quaternion {
        self.q
    }

    pub fn euler(&self) -> EulerAngles {
        self.q.to_euler()
    }

    /// `[yaw, pitch, roll]` in degrees.
    pub fn yaw_pitch_roll(&self) -> [f64; 3] {
        self.euler().to_degrees()
    }
}

/// Earth-frame flux reference with the horizontal component folded onto
/// north, expressed back in the body frame.
fn flux_reference(q: Quaternion, mag: Vec3) -> Vec3 {
    let h = q.rotate(mag);
    let b = Vec3::new((h.x * h.x + h.y * h.y).sqrt(), 0.0, h.z);
    q.rotate_inverse(b)
}

fn mahony_error(q: Quaternion, accel: Option<Vec3>, mag: Option<Vec3>) -> Vec3 {
    let mut err = Vec3::ZERO;
    if let Some(a) = accel {
        err += a.cross(q.rotate_inverse(EARTH_DOWN));
    }
    if let Some(m) = mag {
        err += m.cross(flux_reference(q, m));
    }
    err
}

/// Gradient `Jᵀ f` of the stacked residual: predicted minus measured
/// gravity direction, and the same for the compensated flux.
pub(crate) fn madgwick_gradient(q: Quaternion, accel: Option<Vec3>, mag: Option<Vec3>) -> Quaternion {
    let Quaternion { w, x, y, z } = q;
    let mut g = [0.0; 4];
    let mut accumulate = |f: [f64; 3], jac: [[f64; 4]; 3]| {
        for (fi, row) in f.iter().zip(jac.iter()) {
            for (gk, jk) in g.iter_mut().zip(row) {
                *gk += jk * fi;
            }
        }
    };
    if let Some(a) = accel {
        let f = [
            2.0 * (x * z - w * y) - a.x,
            2.0 * (w * x + y * z) - a.y,
            2.0 * (0.5 - x * x - y * y) - a.z,
        ];
        let jac = [
            [-2.0 * y, 2.0 * z, -2.0 * w, 2.0 * x],
            [2.0 * x, 2.0 * w, 2.0 * z, 2.0 * y],
            [0.0, -4.0 * x, -4.0 * y, 0.0],
        ];
        accumulate(f, jac);
    }
    if let Some(m) = mag {
        let h = q.rotate(m);
        let bx = (h.x * h.x + h.y * h.y).sqrt();
        let bz = h.z;
        let f = [
            2.0 * bx * (0.5 - y * y - z * z) + 2.0 * bz * (x * z - w * y) - m.x,
            2.0 * bx * (x * y - w * z) + 2.0 * bz * (w * x + y * z) - m.y,
            2.0 * bx * (w * y + x * z) + 2.0 * bz * (0.5 - x * x - y * y) - m.z,
        ];
        let jac = [
            [-2.0 * bz * y, 2.0 * bz * z, -4.0 * bx * y - 2.0 * bz * w, -4.0 * bx * z + 2.0 * bz * x],
            [-2.0 * bx * z + 2.0 * bz * x, 2.0 * bx * y + 2.0 * bz * w, 2.0 * bx * x + 2.0 * bz * z, -2.0 * bx * w + 2.0 * bz * y],
            [2.0 * bx * y, 2.0 * bx * z - 4.0 * bz * x, 2.0 * bx * w - 4.0 * bz * y, 2.0 * bx * x],
        ];
        accumulate(f, jac);
    }
    Quaternion::new(g[0], g[1], g[2], g[3])
}

/// Attitude from one gravity reading and an optional flux reading: roll and
/// pitch from the accelerometer, heading from the tilt-compensated
/// magnetometer (zero without one).
pub fn attitude_from_references(accel: Vec3, mag: Option<Vec3>) -> Quaternion {
    let Some(down) = accel.normalized(MIN_REFERENCE_NORM) else {
        return Quaternion::IDENTITY;
    };
    let roll = down.y.atan2(down.z);
    let pitch = (-down.x).atan2((down.y * down.y + down.z * down.z).sqrt());
    let tilt = Quaternion::from_euler(EulerAngles::new(0.0, pitch, roll));
    let yaw = mag
        .and_then(|m| m.normalized(MIN_REFERENCE_NORM))
        .map(|m| {
            let h = tilt.rotate(m);
            (-h.y).atan2(h.x)
        })
        .unwrap_or(0.0);
    Quaternion::from_euler(EulerAngles::new(yaw, pitch, roll))
}

/// Owned filter: configuration plus state, for callers that do not need to
/// keep the two apart.
#[derive(Debug, Clone)]
pub struct Ahrs {
    config: FilterConfig,
    state: FusionState,
}

impl Ahrs {
    pub fn new(config: FilterConfig) -> Result<Self, FusionError> {
        let state = FusionState::new(&config)?;
        Ok(Self { config, state })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn state(&self) -> &FusionState {
        &self.state
    }

    pub fn reset(&mut self) {
        self.state = FusionState { q: Quaternion::IDENTITY, integral_fb: Vec3::ZERO, sample_count: 0 };
    }

    /// Resets to the attitude implied by one accelerometer (and optional
    /// magnetometer) reading.
    pub fn warm_start(&mut self, accel: Vec3, mag: Option<Vec3>) {
        self.reset();
        self.state.q = attitude_from_references(accel, mag);
    }

    pub fn update(&mut self, sample: &MargSample) -> Result<Quaternion, FusionError> {
        self.state = self.state.update_marg(sample, &self.config)?;
        Ok(self.state.q)
    }

    /// Same as [`Ahrs::update`] but the magnetometer reading is ignored.
    pub fn update_imu(&mut self, sample: &MargSample) -> Result<Quaternion, FusionError> {
        self.state = self.state.update_imu(sample, &self.config)?;
        Ok(self.state.q)
    }

    pub fn quaternion(&self) -> Quaternion {
        self.state.q
    }

    pub fn euler(&self) -> EulerAngles {
        self.state.euler()
    }

    pub fn yaw_pitch_roll(&self) -> [f64; 3] {
        self.state.yaw_pitch_roll()
    }
}
