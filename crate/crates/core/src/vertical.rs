//! Barometric altitude and its complementary fusion with gravity-compensated
//! vertical acceleration.
//!
//! The filter predicts with the accelerometer (fast, drifts) and corrects
//! toward the barometer (slow, noisy but unbiased):
//!
//! ```text
//! v += a·dt;  h += v·dt
//! e  = h_baro − h
//! h += k_alt·e·dt;  v += k_vel·e·dt      k_alt = 2/τ, k_vel = 1/τ²
//! ```
//!
//! From barometer to estimate this is `(2s/τ + 1/τ²) / (s + 1/τ)²`, a
//! critically damped second-order loop whose steady state equals the
//! barometric altitude exactly.

use thiserror::Error;

use crate::math::{Quaternion, Vec3};

pub const STANDARD_GRAVITY: f64 = 9.80665;
pub const SEA_LEVEL_PRESSURE: f64 = 1013.25;
pub const MIN_PRESSURE: f64 = 10.0;
pub const MAX_PRESSURE: f64 = 1200.0;

const BARO_SCALE_HEIGHT: f64 = 44330.0;
const BARO_EXPONENT: f64 = 0.1903;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AltitudeError {
    #[error("pressure {0} mbar outside the sensor range 10..=1200 mbar")]
    PressureOutOfRange(f64),
    #[error("time constant must be positive and finite, got {0}")]
    InvalidTimeConstant(f64),
}

fn check_pressure(p: f64) -> Result<f64, AltitudeError> {
    if (MIN_PRESSURE..=MAX_PRESSURE).contains(&p) {
        Ok(p)
    } else {
        Err(AltitudeError::PressureOutOfRange(p))
    }
}

/// International barometric formula: `44330·(1 − (p/p0)^0.1903)` metres.
pub fn pressure_to_altitude(p: f64, p0: f64) -> Result<f64, AltitudeError> {
    let p = check_pressure(p)?;
    let p0 = check_pressure(p0)?;
    Ok(BARO_SCALE_HEIGHT * (1.0 - (p / p0).powf(BARO_EXPONENT)))
}

/// Inverse of [`pressure_to_altitude`]. The result is not range-checked.
pub fn altitude_to_pressure(h: f64, p0: f64) -> f64 {
    p0 * (1.0 - h / BARO_SCALE_HEIGHT).powf(1.0 / BARO_EXPONENT)
}

/// Removes gravity from an accelerometer reading.
///
/// The reading (in g, +1 g on body z when level) is rotated into the earth
/// frame and `(0, 0, 1)` is subtracted. The result is in m/s² on earth axes
/// with the accelerometer's sign convention, so a climb reads as positive z
/// and the NED kinematic acceleration is the negation of the result.
pub fn gravity_compensate(q: Quaternion, accel: Vec3) -> Vec3 {
    (q.rotate(accel) - Vec3::new(0.0, 0.0, 1.0)) * STANDARD_GRAVITY
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaroSample {
    /// mbar
    pub pressure: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltitudeGains {
    pub k_alt: f64,
    pub k_vel: f64,
}

impl AltitudeGains {
    /// Critically damped gains for time constant `tau` seconds.
    pub fn from_time_constant(tau: f64) -> Result<Self, AltitudeError> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(AltitudeError::InvalidTimeConstant(tau));
        }
        Ok(Self { k_alt: 2.0 / tau, k_vel: 1.0 / (tau * tau) })
    }

    /// No barometric correction: pure double integration.
    pub const OPEN_LOOP: AltitudeGains = AltitudeGains { k_alt: 0.0, k_vel: 0.0 };
}

impl Default for AltitudeGains {
    fn default() -> Self {
        Self { k_alt: 2.0, k_vel: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltitudeState {
    /// m, relative to `reference_pressure`
    pub altitude: f64,
    /// m/s, positive up
    pub vertical_velocity: f64,
    /// mbar
    pub reference_pressure: f64,
}

impl Default for AltitudeState {
    fn default() -> Self {
        Self { altitude: 0.0, vertical_velocity: 0.0, reference_pressure: SEA_LEVEL_PRESSURE }
    }
}

impl AltitudeState {
    pub fn with_reference(p0: f64) -> Result<Self, AltitudeError> {
        Ok(Self { reference_pressure: check_pressure(p0)?, ..Self::default() })
    }

    /// One predictor-corrector step. `vert_accel` is positive up, m/s².
    pub fn update(&self, baro_alt: f64, vert_accel: f64, dt: f64, gains: AltitudeGains) -> Self {
        let mut velocity = self.vertical_velocity + vert_accel * dt;
        let mut altitude = self.altitude + velocity * dt;
        let err = baro_alt - altitude;
        altitude += gains.k_alt * err * dt;
        velocity += gains.k_vel * err * dt;
        Self { altitude, vertical_velocity: velocity, reference_pressure: self.reference_pressure }
    }

    /// Barometric altitude of `pressure` relative to this state's reference.
    pub fn baro_altitude(&self, pressure: f64) -> Result<f64, AltitudeError> {
        pressure_to_altitude(pressure, self.reference_pressure)
    }

    /// Re-references altitudes to `p0`. The current estimate is shifted by
    /// the altitude difference between the old and new reference so the
    /// filter does not see a step.
    pub fn set_reference_pressure(&self, p0: f64) -> Result<Self, AltitudeError> {
        let p0 = check_pressure(p0)?;
        let shift = pressure_to_altitude(p0, self.reference_pressure)?;
        Ok(Self { altitude: self.altitude - shift, reference_pressure: p0, ..*self })
    }

    /// Zeroes altitude at the current pressure reading.
    pub fn tare(&self, current_pressure: f64) -> Result<Self, AltitudeError> {
        self.set_reference_pressure(current_pressure)
    }
}

/// Altitude filter that holds the latest barometer reading and runs at the
/// inertial rate.
#[derive(Debug, Clone)]
pub struct AltitudeFilter {
    state: AltitudeState,
    gains: AltitudeGains,
    last_baro: Option<f64>,
}

impl AltitudeFilter {
    pub fn new(tau: f64, reference_pressure: f64) -> Result<Self, AltitudeError> {
        Ok(Self {
            state: AltitudeState::with_reference(reference_pressure)?,
            gains: AltitudeGains::from_time_constant(tau)?,
            last_baro: None,
        })
    }

    pub fn state(&self) -> &AltitudeState {
        &self.state
    }

    pub fn altitude(&self) -> f64 {
        self.state.altitude
    }

    /// Records a new pressure reading. The first reading also initializes
    /// the altitude estimate.
    pub fn push_pressure(&mut self, pressure: f64) -> Result<(), AltitudeError> {
        let h = self.state.baro_altitude(pressure)?;
        if self.last_baro.is_none() {
            self.state.altitude = h;
        }
        self.last_baro = Some(h);
        Ok(())
    }

    /// Advances by `dt` using an attitude and raw accelerometer reading (g).
    pub fn push_inertial(&mut self, q: Quaternion, accel: Vec3, dt: f64) -> f64 {
        let vert = gravity_compensate(q, accel).z;
        self.push_vertical_accel(vert, dt)
    }

    pub fn push_vertical_accel(&mut self, vert_accel: f64, dt: f64) -> f64 {
        let baro = self.last_baro.unwrap_or(self.state.altitude);
        self.state = self.state.update(baro, vert_accel, dt, self.gains);
        self.state.altitude
    }

    pub fn tare(&mut self, current_pressure: f64) -> Result<(), AltitudeError> {
        self.state = self.state.tare(current_pressure)?;
        self.last_baro = Some(0.0);
        Ok(())
    }
}
