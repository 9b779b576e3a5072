use crate::ahrs::MargSample;
use crate::math::Vec3;

/// One timestamped 10-DOF reading as the board reports it: rad/s, g, gauss
/// and mbar.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RawSample {
    /// seconds
    pub t: f64,
    pub gyro: Vec3,
    pub accel: Vec3,
    pub mag: Vec3,
    pub pressure: f64,
}

impl RawSample {
    /// The ten sensor channels in wire order: gyro, accel, mag, pressure.
    pub fn channels(&self) -> [f64; 10] {
        let [gx, gy, gz] = self.gyro.to_array();
        let [ax, ay, az] = self.accel.to_array();
        let [mx, my, mz] = self.mag.to_array();
        [gx, gy, gz, ax, ay, az, mx, my, mz, self.pressure]
    }

    pub fn from_channels(t: f64, c: [f64; 10]) -> Self {
        Self {
            t,
            gyro: Vec3::new(c[0], c[1], c[2]),
            accel: Vec3::new(c[3], c[4], c[5]),
            mag: Vec3::new(c[6], c[7], c[8]),
            pressure: c[9],
        }
    }

    /// Inertial part of the sample for the attitude filter.
    pub fn to_marg(&self, dt: f64, use_mag: bool) -> MargSample {
        MargSample::new(self.gyro, self.accel, use_mag.then_some(self.mag), dt)
    }
}
