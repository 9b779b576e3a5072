//! Raw samples in, attitude and altitude estimates out.

use thiserror::Error;

use crate::ahrs::{Ahrs, FilterConfig, FusionError};
use crate::calibration::CalibrationParams;
use crate::sample::RawSample;
use crate::sim::evaluate::Estimate;
use crate::vertical::{AltitudeError, AltitudeFilter, SEA_LEVEL_PRESSURE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Altitude(#[from] AltitudeError),
    #[error("sample at t = {t}: time step {dt} s is not in (0, 1)")]
    TimeStep { t: f64, dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub filter: FilterConfig,
    pub calibration: CalibrationParams,
    /// Fuse the magnetometer (9-DOF) or not (6-DOF).
    pub use_mag: bool,
    /// Altitude filter time constant, s.
    pub tau: f64,
    /// mbar
    pub reference_pressure: f64,
    /// Initialize the attitude from the first sample instead of identity.
    pub warm_start: bool,
    /// Step used for the first sample, which has no predecessor, s.
    pub nominal_dt: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            filter: FilterConfig::default(),
            calibration: CalibrationParams::IDENTITY,
            use_mag: true,
            tau: 1.0,
            reference_pressure: SEA_LEVEL_PRESSURE,
            warm_start: false,
            nominal_dt: 0.01,
        }
    }
}

/// Calibration, attitude fusion and the altitude filter, driven by one
/// stream of raw samples.
#[derive(Debug, Clone)]
pub struct Pipeline {
    config: PipelineConfig,
    ahrs: Ahrs,
    altitude: AltitudeFilter,
    last_t: Option<f64>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        Ok(Self {
            ahrs: Ahrs::new(config.filter)?,
            altitude: AltitudeFilter::new(config.tau, config.reference_pressure)?,
            config,
            last_t: None,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn ahrs(&self) -> &Ahrs {
        &self.ahrs
    }

    pub fn altitude_filter(&self) -> &AltitudeFilter {
        &self.altitude
    }

    /// Back to the state right after construction.
    pub fn reset(&mut self) {
        *self = Self::new(self.config).expect("configuration was validated at construction");
    }

    /// Re-zeroes altitude at the given pressure.
    pub fn tare(&mut self, pressure: f64) -> Result<(), PipelineError> {
        Ok(self.altitude.tare(pressure)?)
    }

    pub fn push(&mut self, raw: &RawSample) -> Result<Estimate, PipelineError> {
        let sample = self.config.calibration.apply(raw);
        let dt = match self.last_t {
            Some(prev) => sample.t - prev,
            None => self.config.nominal_dt,
        };
        if !(dt > 0.0 && dt < 1.0) {
            return Err(PipelineError::TimeStep { t: sample.t, dt });
        }
        self.altitude.push_pressure(sample.pressure)?;
        let marg = sample.to_marg(dt, self.config.use_mag);
        let q = if self.last_t.is_none() && self.config.warm_start {
            self.ahrs.warm_start(marg.accel, marg.mag);
            self.ahrs.quaternion()
        } else if self.config.use_mag {
            self.ahrs.update(&marg)?
        } else {
            self.ahrs.update_imu(&marg)?
        };
        let altitude = self.altitude.push_inertial(q, sample.accel, dt);
        self.last_t = Some(sample.t);
        Ok(Estimate { t: sample.t, q, altitude: Some(altitude) })
    }
}

pub fn run_pipeline(samples: &[RawSample], config: PipelineConfig) -> Result<Vec<Estimate>, PipelineError> {
    let mut p = Pipeline::new(config)?;
    samples.iter().map(|s| p.push(s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{Quaternion, Vec3};

    fn level(t: f64) -> RawSample {
        RawSample {
            t,
            gyro: Vec3::ZERO,
            accel: Vec3::new(0.0, 0.0, 1.0),
            mag: Vec3::new(0.2, 0.0, 0.4),
            pressure: SEA_LEVEL_PRESSURE,
        }
    }

    #[test]
    fn level_board_stays_put() {
        let samples: Vec<RawSample> = (0..100).map(|k| level(k as f64 * 0.01)).collect();
        let est = run_pipeline(&samples, PipelineConfig::default()).unwrap();
        assert_eq!(est.len(), 100);
        assert!(est.iter().all(|e| e.q == Quaternion::IDENTITY && e.altitude == Some(0.0)));
    }

    #[test]
    fn warm_start_takes_first_reading() {
        let mut s = level(0.0);
        s.accel = Vec3::new(0.0, 1.0, 0.0);
        s.mag = Vec3::new(0.2, 0.4, 0.0);
        let mut p = Pipeline::new(PipelineConfig { warm_start: true, ..Default::default() }).unwrap();
        let e = p.push(&s).unwrap();
        assert!((e.q.to_euler().roll.to_degrees() - 90.0).abs() < 1e-9);
    }

    #[test]
    fn bad_time_steps_are_rejected() {
        let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
        p.push(&level(1.0)).unwrap();
        assert!(matches!(p.push(&level(1.0)), Err(PipelineError::TimeStep { .. })));
        assert!(matches!(p.push(&level(0.5)), Err(PipelineError::TimeStep { .. })));
        p.reset();
        assert!(p.push(&level(0.5)).is_ok());
    }
}
