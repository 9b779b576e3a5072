//! Attitude and altitude estimation for 10-DOF MARG boards (gyroscope,
//! accelerometer, magnetometer, barometer), with a simulator that stands in
//! for the hardware.
//!
//! ```
//! use marg_fusion::ahrs::{Ahrs, FilterConfig, MargSample};
//! use marg_fusion::math::Vec3;
//!
//! let mut ahrs = Ahrs::new(FilterConfig::default()).unwrap();
//! let level = MargSample::new(Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), Some(Vec3::new(0.2, 0.0, 0.4)), 0.01);
//! let q = ahrs.update(&level).unwrap();
//! assert!((q.norm() - 1.0).abs() < 1e-12);
//! ```
//!
//! Conventions: quaternions are scalar-first and rotate body vectors into
//! the NED earth frame; a level board at rest reads (0, 0, +1) g.
//!
//! ## Examples
//!
//! Each capability has a runnable example (`cargo run --example NAME`):
//!
//! | example | shows |
//! |---|---|
//! | `quaternion_math` | Euler/quaternion conversion, frame rotation |
//! | `orientation` | Mahony and Madgwick filters, 9-DOF and 6-DOF, scored against truth |
//! | `calibration` | guided calibration session and its effect on attitude error |
//! | `altitude` | barometer plus accelerometer altitude through a 1 m climb |
//! | `taps` | single and double tap detection |
//! | `displacement` | double-integrated planar motion and its drift |
//! | `inertial_mouse` | tilt mapped to pointer deltas |
//! | `serve_device` | the binary device protocol over TCP |
//! | `simulate` | scenarios, CSV traces and evaluation |
//!
//! The `marg` binary wraps the same pieces as command-line subcommands.

pub mod ahrs;
pub mod calibration;
pub mod cli;
pub mod io;
pub mod math;
pub mod motion;
pub mod pipeline;
pub mod protocol;
pub mod sample;
pub mod sim;
pub mod vertical;

pub use ahrs::{Ahrs, Algorithm, FilterConfig, FusionState, MargSample};
pub use calibration::{CalibrationParams, CalibrationSession};
pub use math::{EulerAngles, Quaternion, Vec3};
pub use pipeline::{Pipeline, PipelineConfig};
pub use sample::RawSample;
pub use vertical::AltitudeFilter;
